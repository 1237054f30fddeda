//! C interface to the planrec engine.
//!
//! Knowledge bases and sessions are opaque handles. Every fallible function
//! returns a [`PlanrecStatus`]; on failure `planrec_last_error` gives a
//! message for the calling thread. Strings handed out by the library must be
//! released with `planrec_string_free`.
//!
//! A session keeps its knowledge base alive, so the KB handle may be freed
//! as soon as the session exists.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::sync::Arc;

use planrec::direct::DirectError;
use planrec::engine::EngineError;
use planrec::knowledge::KbError;
use planrec::transcript::{parse_line, Line};
use planrec::{KnowledgeBase, ResultDocument, Session};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlanrecStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    Io = 3,
    Parse = 4,
    Validation = 5,
    NoInterpretation = 6,
    EmptySet = 7,
    Panic = 8,
}

/// A loaded, validated knowledge base.
pub struct PlanrecKb {
    inner: Arc<KnowledgeBase>,
}

/// One dialogue against a knowledge base.
pub struct PlanrecSession {
    kb: Arc<KnowledgeBase>,
    inner: Session,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: impl Into<String>) {
    let text = message.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(text).ok());
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

fn fail(status: PlanrecStatus, message: impl Into<String>) -> PlanrecStatus {
    set_error(message);
    status
}

/// Run `f`, turning a panic into `Panic`.
fn guard(f: impl FnOnce() -> PlanrecStatus) -> PlanrecStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => status,
        Err(_) => fail(PlanrecStatus::Panic, "internal panic"),
    }
}

unsafe fn read_str<'a>(s: *const c_char) -> Result<&'a str, PlanrecStatus> {
    if s.is_null() {
        return Err(fail(PlanrecStatus::NullArgument, "null string argument"));
    }
    CStr::from_ptr(s)
        .to_str()
        .map_err(|e| fail(PlanrecStatus::InvalidUtf8, e.to_string()))
}

fn kb_status(e: &KbError) -> PlanrecStatus {
    let status = match e {
        KbError::Io { .. } => PlanrecStatus::Io,
        KbError::Parse(_) => PlanrecStatus::Parse,
        KbError::Validation(_) => PlanrecStatus::Validation,
    };
    let mut message = e.to_string();
    if let KbError::Validation(diags) = e {
        for d in diags {
            message.push_str("\n  ");
            message.push_str(&d.to_string());
        }
    }
    fail(status, message)
}

unsafe fn store_kb(result: Result<KnowledgeBase, KbError>, out: *mut *mut PlanrecKb) -> PlanrecStatus {
    match result {
        Ok(kb) => {
            *out = Box::into_raw(Box::new(PlanrecKb { inner: Arc::new(kb) }));
            PlanrecStatus::Ok
        }
        Err(e) => kb_status(&e),
    }
}

/// Load and validate a knowledge base file. On success `*out` receives a
/// handle to free with `planrec_kb_free`.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn planrec_kb_load(path: *const c_char, out: *mut *mut PlanrecKb) -> PlanrecStatus {
    guard(|| {
        if out.is_null() {
            return fail(PlanrecStatus::NullArgument, "null output pointer");
        }
        *out = ptr::null_mut();
        let path = match read_str(path) {
            Ok(p) => p,
            Err(s) => return s,
        };
        store_kb(planrec::load_kb(path), out)
    })
}

/// Parse and validate a knowledge base from JSON text.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn planrec_kb_from_json(json: *const c_char, out: *mut *mut PlanrecKb) -> PlanrecStatus {
    guard(|| {
        if out.is_null() {
            return fail(PlanrecStatus::NullArgument, "null output pointer");
        }
        *out = ptr::null_mut();
        let json = match read_str(json) {
            Ok(j) => j,
            Err(s) => return s,
        };
        store_kb(KnowledgeBase::from_json_str(json), out)
    })
}

/// # Safety
/// `kb` must come from this library and not be freed twice. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn planrec_kb_free(kb: *mut PlanrecKb) {
    if !kb.is_null() {
        drop(Box::from_raw(kb));
    }
}

/// Start a session with the thresholds and ICNORM mode from the KB config.
///
/// # Safety
/// `kb` must be a live handle and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn planrec_session_new(kb: *const PlanrecKb, out: *mut *mut PlanrecSession) -> PlanrecStatus {
    guard(|| {
        if out.is_null() {
            return fail(PlanrecStatus::NullArgument, "null output pointer");
        }
        *out = ptr::null_mut();
        let Some(kb) = kb.as_ref() else {
            return fail(PlanrecStatus::NullArgument, "null knowledge base");
        };
        let shared = Arc::clone(&kb.inner);
        let session = Box::new(PlanrecSession {
            inner: Session::with_defaults(Arc::clone(&shared)),
            kb: shared,
        });
        *out = Box::into_raw(session);
        PlanrecStatus::Ok
    })
}

/// Feed one transcript record (a single JSON line). A header record or a
/// blank line is accepted and ignored. On `NO_INTERPRETATION` or
/// `EMPTY_SET` the session is unchanged.
///
/// # Safety
/// `session` must be a live handle and `record_json` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn planrec_session_process(session: *mut PlanrecSession, record_json: *const c_char) -> PlanrecStatus {
    guard(|| {
        let Some(session) = session.as_mut() else {
            return fail(PlanrecStatus::NullArgument, "null session");
        };
        let text = match read_str(record_json) {
            Ok(t) => t,
            Err(s) => return s,
        };
        let pred = match parse_line(text) {
            Ok(Line::Record(p)) => p,
            Ok(_) => return PlanrecStatus::Ok,
            Err(e) => return fail(PlanrecStatus::Parse, e),
        };
        match session.inner.process_statement(&pred) {
            Ok(()) => PlanrecStatus::Ok,
            Err(e) => {
                let EngineError::Direct { source, .. } = &e;
                let status = match source {
                    DirectError::NoInterpretation(_) => PlanrecStatus::NoInterpretation,
                    DirectError::EmptySet => PlanrecStatus::EmptySet,
                };
                fail(status, e.to_string())
            }
        }
    })
}

/// Number of live interpretations; 0 for a null handle.
///
/// # Safety
/// `session` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn planrec_session_live_count(session: *const PlanrecSession) -> usize {
    session.as_ref().map_or(0, |s| s.inner.live().len())
}

/// Run indirect inference and ranking, writing the result document (the
/// same JSON `planrec interpret` prints) to `*out_json`. The live set is
/// not consumed. Returns `EMPTY_SET` if nothing survives; the document is
/// still written.
///
/// # Safety
/// `session` must be a live handle and `out_json` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn planrec_session_finalize(session: *const PlanrecSession, out_json: *mut *mut c_char) -> PlanrecStatus {
    guard(|| {
        if out_json.is_null() {
            return fail(PlanrecStatus::NullArgument, "null output pointer");
        }
        *out_json = ptr::null_mut();
        let Some(session) = session.as_ref() else {
            return fail(PlanrecStatus::NullArgument, "null session");
        };
        let doc = ResultDocument::build(&session.inner.finalize(), &session.kb, false);
        let Ok(text) = CString::new(doc.to_json()) else {
            return fail(PlanrecStatus::Panic, "result document contains NUL");
        };
        *out_json = text.into_raw();
        if doc.interpretations.is_empty() {
            fail(PlanrecStatus::EmptySet, "no interpretation survived")
        } else {
            PlanrecStatus::Ok
        }
    })
}

/// Forget the dialogue so far.
///
/// # Safety
/// `session` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn planrec_session_reset(session: *mut PlanrecSession) -> PlanrecStatus {
    guard(|| match session.as_mut() {
        Some(s) => {
            s.inner.reset();
            PlanrecStatus::Ok
        }
        None => fail(PlanrecStatus::NullArgument, "null session"),
    })
}

/// # Safety
/// `session` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn planrec_session_free(session: *mut PlanrecSession) {
    if !session.is_null() {
        drop(Box::from_raw(session));
    }
}

/// # Safety
/// `s` must be a string returned by this library, or null.
#[no_mangle]
pub unsafe extern "C" fn planrec_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Message for the last failed call on this thread, or null. Valid until
/// the next call into the library from the same thread.
#[no_mangle]
pub extern "C" fn planrec_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version, statically allocated.
#[no_mangle]
pub extern "C" fn planrec_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}
