//! C ABI over the `slalom` engine.
//!
//! Every entry point returns a [`SlalomStatus`]. Results come back through
//! out-pointers; strings handed out by the library are freed with
//! [`slalom_string_free`] and conditions with [`slalom_condition_free`].
//! After a non-OK status, [`slalom_last_error`] describes what went wrong on
//! the calling thread.

use std::cell::RefCell;
use std::collections::BTreeSet;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use slalom::conditions::{to_normal_form, validate_condition, CoordId, CoordTriple, ProductCondition};
use slalom::covernum::{cover_number_bounds, cover_number_exact, Exact};
use slalom::extraction::{extract_slalom, FiniteName};
use slalom::game::{play, Bookkeeping, Minimal, Spendthrift, Thinning};
use slalom::{BoundFn, Error};

/// Status codes shared by every function.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SlalomStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    InvalidInput = 3,
    GuardExceeded = 4,
    BudgetExceeded = 5,
    /// A check ran and reported violations.
    CheckFailed = 6,
    /// A broken internal guarantee or a caught panic.
    Internal = 7,
}

/// Spendthrift strategies exposed to C.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SlalomSpendthrift {
    Minimal = 0,
    /// Thinning to the upper half of every split.
    ThinningUpperHalf = 1,
}

/// Opaque handle to a product condition.
pub struct SlalomCondition {
    inner: ProductCondition,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn status_of(e: &Error) -> SlalomStatus {
    match e {
        Error::GuardExceeded { .. } => SlalomStatus::GuardExceeded,
        Error::Violations(_)
        | Error::PreimageBound { .. }
        | Error::NormBudget { .. }
        | Error::CaseBound { .. }
        | Error::NoAvoidingNode(_)
        | Error::NotCovering(_) => SlalomStatus::CheckFailed,
        Error::Invariant(_) => SlalomStatus::Internal,
        _ => SlalomStatus::InvalidInput,
    }
}

struct Fail(SlalomStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> SlalomStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            SlalomStatus::Ok
        }
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("panic inside the library");
            SlalomStatus::Internal
        }
    }
}

fn null(what: &str) -> Fail {
    Fail(SlalomStatus::NullPointer, format!("{what} is null"))
}

unsafe fn read_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Fail(SlalomStatus::InvalidUtf8, format!("{what} is not UTF-8")))
}

unsafe fn read_json<T: serde::de::DeserializeOwned>(p: *const c_char, what: &str) -> Result<T, Fail> {
    let s = read_str(p, what)?;
    serde_json::from_str(s).map_err(|e| Fail(SlalomStatus::InvalidInput, format!("{what}: {e}")))
}

unsafe fn read_bound(p: *const u64, len: usize, what: &str) -> Result<BoundFn, Fail> {
    if p.is_null() && len > 0 {
        return Err(null(what));
    }
    let v = if len == 0 {
        &[][..]
    } else {
        std::slice::from_raw_parts(p, len)
    };
    Ok(BoundFn::from_u64s(v)?)
}

unsafe fn handle<'a>(c: *const SlalomCondition) -> Result<&'a ProductCondition, Fail> {
    c.as_ref().map(|h| &h.inner).ok_or_else(|| null("condition"))
}

unsafe fn give_string(out: *mut *mut c_char, s: String) -> Result<(), Fail> {
    let c = CString::new(s).map_err(|_| Fail(SlalomStatus::Internal, "output contains NUL".into()))?;
    *out = c.into_raw();
    Ok(())
}

fn to_json(v: &impl serde::Serialize) -> Result<String, Fail> {
    serde_json::to_string(v).map_err(|e| Fail(SlalomStatus::Internal, e.to_string()))
}

/// Message for the last failed call on this thread, or NULL after a
/// successful one. Owned by the library; valid until the next call.
#[no_mangle]
pub extern "C" fn slalom_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Frees a string returned by this library. NULL is ignored.
///
/// # Safety
/// `s` must come from this library and not have been freed already.
#[no_mangle]
pub unsafe extern "C" fn slalom_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Counting and grid bounds on the covering number of `∏ f` by `g`-slaloms.
///
/// # Safety
/// `f` and `g` must point to `len` readable values; `lower` and `upper` must
/// be writable.
#[no_mangle]
pub unsafe extern "C" fn slalom_cover_bounds(
    f: *const u64,
    g: *const u64,
    len: usize,
    lower: *mut u64,
    upper: *mut u64,
) -> SlalomStatus {
    guard(|| {
        if lower.is_null() || upper.is_null() {
            return Err(null("output"));
        }
        let b = cover_number_bounds(&read_bound(f, len, "f")?, &read_bound(g, len, "g")?)?;
        let conv =
            |x: u128| u64::try_from(x).map_err(|_| Fail(SlalomStatus::InvalidInput, format!("{x} overflows u64")));
        *lower = conv(b.lower)?;
        *upper = conv(b.upper)?;
        Ok(())
    })
}

/// Exact covering number, searching families of size at most `budget`.
/// Returns `BudgetExceeded` when no family that small covers.
///
/// # Safety
/// `f` and `g` must point to `len` readable values; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn slalom_cover_number(
    f: *const u64,
    g: *const u64,
    len: usize,
    budget: u64,
    out: *mut u64,
) -> SlalomStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        match cover_number_exact(&read_bound(f, len, "f")?, &read_bound(g, len, "g")?, budget)? {
            Exact::Found { size, .. } => {
                *out = size;
                Ok(())
            }
            Exact::ExceedsBudget { budget } => Err(Fail(
                SlalomStatus::BudgetExceeded,
                format!("no cover with at most {budget} slaloms"),
            )),
        }
    })
}

/// Parses a condition from JSON. The handle is freed with
/// [`slalom_condition_free`].
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn slalom_condition_from_json(
    json: *const c_char,
    out: *mut *mut SlalomCondition,
) -> SlalomStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let inner: ProductCondition = read_json(json, "condition")?;
        *out = Box::into_raw(Box::new(SlalomCondition { inner }));
        Ok(())
    })
}

/// # Safety
/// `c` must come from this library and not have been freed already.
#[no_mangle]
pub unsafe extern "C" fn slalom_condition_free(c: *mut SlalomCondition) {
    if !c.is_null() {
        drop(Box::from_raw(c));
    }
}

/// `Ok` if every tree is valid, `CheckFailed` with the violations in the
/// last error otherwise.
///
/// # Safety
/// `c` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn slalom_condition_validate(c: *const SlalomCondition) -> SlalomStatus {
    guard(|| Ok(validate_condition(handle(c)?)?))
}

/// # Safety
/// `c` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn slalom_condition_is_normal_form(c: *const SlalomCondition, out: *mut bool) -> SlalomStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = handle(c)?.is_normal_form();
        Ok(())
    })
}

/// A new handle holding the normal form of `c`.
///
/// # Safety
/// `c` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn slalom_condition_normalize(
    c: *const SlalomCondition,
    out: *mut *mut SlalomCondition,
) -> SlalomStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let inner = to_normal_form(handle(c)?)?;
        *out = Box::into_raw(Box::new(SlalomCondition { inner }));
        Ok(())
    })
}

/// # Safety
/// `c` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn slalom_condition_to_json(c: *const SlalomCondition, out: *mut *mut c_char) -> SlalomStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        give_string(out, to_json(handle(c)?)?)
    })
}

/// Plays `rounds` rounds of the fusion game from `c` with the bookkeeping
/// accountant and writes the transcript as JSON.
///
/// # Safety
/// `c` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn slalom_game_play(
    c: *const SlalomCondition,
    rounds: usize,
    spendthrift: SlalomSpendthrift,
    out: *mut *mut c_char,
) -> SlalomStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let p = to_normal_form(handle(c)?)?;
        let thin;
        let sp: &dyn Spendthrift = match spendthrift {
            SlalomSpendthrift::Minimal => &Minimal,
            SlalomSpendthrift::ThinningUpperHalf => {
                thin = Thinning {
                    sets: slalom::corpus::upper_half_sets(&p),
                };
                &thin
            }
        };
        let res = play(&p, &mut Bookkeeping, sp, rounds)?;
        give_string(out, to_json(&res)?)
    })
}

/// Extracts per-level slalom sets for the name `name_json` on `c`.
/// `xi_json` is `{"f": [..], "g": [..], "h": [..]}` and `a_json` a JSON
/// array of coordinate ids read fiberwise. The extraction is written as JSON.
///
/// # Safety
/// `c` must be a live handle, the strings NUL-terminated and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn slalom_extract(
    c: *const SlalomCondition,
    name_json: *const c_char,
    xi_json: *const c_char,
    a_json: *const c_char,
    out: *mut *mut c_char,
) -> SlalomStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let p = handle(c)?;
        let name: FiniteName = read_json(name_json, "name")?;
        let xi: CoordTriple = read_json(xi_json, "xi")?;
        let a: BTreeSet<CoordId> = read_json(a_json, "A")?;
        let e = extract_slalom(p, &name, &a, &xi)?;
        give_string(out, to_json(&e)?)
    })
}
