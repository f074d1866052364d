use std::ffi::{CStr, CString};
use std::ptr;

use slalom_ffi::*;

const GOOD: &str = r#"{"depth":2,"coords":{"a":{"triple":{"f":[4,16],"g":[2,2],"h":[2,2]},"nodes":[[],[0],[1],[0,0],[0,1],[0,2],[0,3],[1,0],[1,1],[1,2],[1,3]]}}}"#;
const BAD: &str = r#"{"depth":2,"coords":{"a":{"triple":{"f":[4,16],"g":[2,2],"h":[2,2]},"nodes":[[],[0],[1],[0,0],[0,1],[1,0],[1,1]]}}}"#;

fn last_error() -> String {
    let p = slalom_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_str().unwrap().to_owned()
}

fn load(json: &str) -> *mut SlalomCondition {
    let s = CString::new(json).unwrap();
    let mut c = ptr::null_mut();
    assert_eq!(
        unsafe { slalom_condition_from_json(s.as_ptr(), &mut c) },
        SlalomStatus::Ok
    );
    c
}

fn take(s: *mut std::ffi::c_char) -> String {
    let out = unsafe { CStr::from_ptr(s) }.to_str().unwrap().to_owned();
    unsafe { slalom_string_free(s) };
    out
}

#[test]
fn cover_number_examples() {
    for (f, g, want) in [
        (&[3u64][..], &[2u64][..], 2),
        (&[3, 3], &[2, 2], 3),
        (&[2, 2], &[1, 1], 4),
        (&[4, 4], &[2, 2], 4),
    ] {
        let mut out = 0;
        let st = unsafe { slalom_cover_number(f.as_ptr(), g.as_ptr(), f.len(), 16, &mut out) };
        assert_eq!(st, SlalomStatus::Ok);
        assert_eq!(out, want);
    }
    let (mut lo, mut hi) = (0, 0);
    let st = unsafe { slalom_cover_bounds([3, 3].as_ptr(), [2, 2].as_ptr(), 2, &mut lo, &mut hi) };
    assert_eq!((st, lo, hi), (SlalomStatus::Ok, 3, 4));
}

#[test]
fn budget_and_null_errors() {
    let mut out = 0;
    let st = unsafe { slalom_cover_number([3, 3].as_ptr(), [2, 2].as_ptr(), 2, 2, &mut out) };
    assert_eq!(st, SlalomStatus::BudgetExceeded);
    assert!(last_error().contains("at most 2"));
    let st = unsafe { slalom_cover_number(ptr::null(), [2].as_ptr(), 1, 4, &mut out) };
    assert_eq!(st, SlalomStatus::NullPointer);
    let st = unsafe { slalom_cover_number([3].as_ptr(), [2].as_ptr(), 1, 4, ptr::null_mut()) };
    assert_eq!(st, SlalomStatus::NullPointer);
    assert_eq!(
        unsafe { slalom_condition_validate(ptr::null()) },
        SlalomStatus::NullPointer
    );
}

#[test]
fn success_clears_last_error() {
    let mut out = 0;
    unsafe { slalom_cover_number(ptr::null(), ptr::null(), 1, 4, &mut out) };
    assert!(!slalom_last_error().is_null());
    let st = unsafe { slalom_cover_number([3].as_ptr(), [2].as_ptr(), 1, 4, &mut out) };
    assert_eq!(st, SlalomStatus::Ok);
    assert!(slalom_last_error().is_null());
}

#[test]
fn condition_lifecycle() {
    let good = load(GOOD);
    assert_eq!(unsafe { slalom_condition_validate(good) }, SlalomStatus::Ok);
    let mut normal = false;
    assert_eq!(
        unsafe { slalom_condition_is_normal_form(good, &mut normal) },
        SlalomStatus::Ok
    );
    assert!(!normal);
    let mut q = ptr::null_mut();
    assert_eq!(unsafe { slalom_condition_normalize(good, &mut q) }, SlalomStatus::Ok);
    assert_eq!(
        unsafe { slalom_condition_is_normal_form(q, &mut normal) },
        SlalomStatus::Ok
    );
    assert!(normal);
    let mut s = ptr::null_mut();
    assert_eq!(unsafe { slalom_condition_to_json(good, &mut s) }, SlalomStatus::Ok);
    let first = take(s);
    let again = load(&first);
    assert_eq!(unsafe { slalom_condition_to_json(again, &mut s) }, SlalomStatus::Ok);
    assert_eq!(take(s), first);
    let nodes = serde_json::from_str::<serde_json::Value>(&first).unwrap()["coords"]["a"]["nodes"]
        .as_array()
        .unwrap()
        .len();
    assert_eq!(nodes, 11);
    unsafe { slalom_condition_free(again) };

    let bad = load(BAD);
    assert_eq!(unsafe { slalom_condition_validate(bad) }, SlalomStatus::CheckFailed);
    assert!(last_error().contains("split-norm"));
    unsafe {
        slalom_condition_free(good);
        slalom_condition_free(q);
        slalom_condition_free(bad);
        slalom_condition_free(ptr::null_mut());
        slalom_string_free(ptr::null_mut());
    }
}

#[test]
fn malformed_json_is_invalid_input() {
    let s = CString::new("{\"depth\": 1").unwrap();
    let mut c = ptr::null_mut();
    assert_eq!(
        unsafe { slalom_condition_from_json(s.as_ptr(), &mut c) },
        SlalomStatus::InvalidInput
    );
    assert!(c.is_null());
    let bytes = [0xffu8, 0];
    let st = unsafe { slalom_condition_from_json(bytes.as_ptr().cast(), &mut c) };
    assert_eq!(st, SlalomStatus::InvalidUtf8);
}

#[test]
fn game_transcript() {
    let c = load(GOOD);
    for sp in [SlalomSpendthrift::Minimal, SlalomSpendthrift::ThinningUpperHalf] {
        let mut s = ptr::null_mut();
        assert_eq!(
            unsafe { slalom_game_play(c, 3, sp, &mut s) },
            SlalomStatus::Ok,
            "{}",
            last_error()
        );
        let v: serde_json::Value = serde_json::from_str(&take(s)).unwrap();
        assert!(v["fused"].is_object(), "{v}");
    }
    unsafe { slalom_condition_free(c) };
}

#[test]
fn extract_through_c_abi() {
    let scale = slalom::scales::ScaleSeq::preset("T2").unwrap();
    let inst = slalom::corpus::random_extraction_instance(&mut slalom::corpus::rng(3), &scale, 3).unwrap();
    let c = load(&serde_json::to_string(&inst.condition).unwrap());
    let name = CString::new(serde_json::to_string(&inst.name).unwrap()).unwrap();
    let xi = CString::new(serde_json::to_string(&inst.xi).unwrap()).unwrap();
    let a = CString::new(serde_json::to_string(&inst.a).unwrap()).unwrap();
    let mut s = ptr::null_mut();
    let st = unsafe { slalom_extract(c, name.as_ptr(), xi.as_ptr(), a.as_ptr(), &mut s) };
    assert_eq!(st, SlalomStatus::Ok, "{}", last_error());
    let v: serde_json::Value = serde_json::from_str(&take(s)).unwrap();
    assert_eq!(v["levels"].as_array().unwrap().len(), inst.condition.depth());
    assert!(v["branches_checked"].as_u64().unwrap() > 0);

    let wrong = CString::new(r#"{"f":[1],"g":[1],"h":[2]}"#).unwrap();
    let st = unsafe { slalom_extract(c, name.as_ptr(), wrong.as_ptr(), a.as_ptr(), &mut s) };
    assert_ne!(st, SlalomStatus::Ok);
    unsafe { slalom_condition_free(c) };
}
