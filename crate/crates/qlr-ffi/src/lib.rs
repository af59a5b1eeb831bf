//! C ABI for the solver toolkit: opaque instance handles, JSON in/out,
//! integer error codes, and a thread-local last-error message.

use std::cell::RefCell;
use std::ffi::{CStr, CString};
use std::os::raw::c_char;

use qlr::error::QlrError;
use qlr::evc::solve_evc;
use qlr::exact::{ground_energy_full, ground_energy_nullspace, ground_energy_tvc};
use qlr::instance::Kind;
use qlr::json::{evc_report_to_json, parse_instance, report_to_json, Report};
use qlr::localratio::{certify, local_ratios, lr_tpcvc, lr_tvc};
use qlr::state::evaluate;

pub const QLR_OK: i32 = 0;
pub const QLR_ERR_NULL: i32 = 1;
pub const QLR_ERR_PARSE: i32 = 2;
pub const QLR_ERR_INVALID: i32 = 3;
pub const QLR_ERR_KIND: i32 = 4;
pub const QLR_ERR_CAP: i32 = 5;
pub const QLR_ERR_NUMERIC: i32 = 6;
pub const QLR_ERR_INFEASIBLE: i32 = 7;
pub const QLR_ERR_UTF8: i32 = 8;

/// Opaque problem-instance handle.
#[repr(C)]
pub struct QlrInstance {
    _private: [u8; 0],
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::new("").unwrap());
}

fn set_error(msg: &str) {
    let safe = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = safe);
}

fn code_of(err: &QlrError) -> i32 {
    match err {
        QlrError::Json(_) => QLR_ERR_PARSE,
        QlrError::Io(_) => QLR_ERR_PARSE,
        QlrError::KindMismatch(_) => QLR_ERR_KIND,
        QlrError::CapExceeded(_) => QLR_ERR_CAP,
        QlrError::NonHermitian(_) | QlrError::NoConvergence { .. } => QLR_ERR_NUMERIC,
        QlrError::Infeasible(_) => QLR_ERR_INFEASIBLE,
        _ => QLR_ERR_INVALID,
    }
}

fn fail(err: QlrError) -> i32 {
    let code = code_of(&err);
    set_error(&err.to_string());
    code
}

unsafe fn instance_ref<'a>(handle: *const QlrInstance) -> Option<&'a qlr::Instance> {
    (handle as *const qlr::Instance).as_ref()
}

fn export_string(text: String, out: *mut *mut c_char) -> i32 {
    match CString::new(text) {
        Ok(s) => {
            unsafe { *out = s.into_raw() };
            QLR_OK
        }
        Err(_) => {
            set_error("output contained an interior NUL byte");
            QLR_ERR_UTF8
        }
    }
}

/// Last error message for this thread; valid until the next failing call.
#[no_mangle]
pub extern "C" fn qlr_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version string (static storage).
#[no_mangle]
pub extern "C" fn qlr_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Parse an instance from JSON. On success stores a new handle in `out`
/// and returns QLR_OK; the handle must be released with
/// `qlr_instance_free`.
#[no_mangle]
pub unsafe extern "C" fn qlr_instance_parse(
    json: *const c_char,
    out: *mut *mut QlrInstance,
) -> i32 {
    if json.is_null() || out.is_null() {
        set_error("null pointer argument");
        return QLR_ERR_NULL;
    }
    let text = match CStr::from_ptr(json).to_str() {
        Ok(t) => t,
        Err(_) => {
            set_error("input is not valid UTF-8");
            return QLR_ERR_UTF8;
        }
    };
    match parse_instance(text) {
        Ok(inst) => {
            *out = Box::into_raw(Box::new(inst)) as *mut QlrInstance;
            QLR_OK
        }
        Err(e) => fail(e),
    }
}

#[no_mangle]
pub unsafe extern "C" fn qlr_instance_free(handle: *mut QlrInstance) {
    if !handle.is_null() {
        drop(Box::from_raw(handle as *mut qlr::Instance));
    }
}

/// Number of qubits, or -1 for a null handle.
#[no_mangle]
pub unsafe extern "C" fn qlr_instance_n(handle: *const QlrInstance) -> i64 {
    instance_ref(handle).map_or(-1, |inst| inst.n as i64)
}

/// Number of constraint edges, or -1 for a null handle.
#[no_mangle]
pub unsafe extern "C" fn qlr_instance_edge_count(handle: *const QlrInstance) -> i64 {
    instance_ref(handle).map_or(-1, |inst| inst.edges.len() as i64)
}

/// Run the local-ratio solver (tvc or pcvc instances). On success stores
/// a report JSON string in `out_json`; release it with `qlr_string_free`.
/// `with_certificate_check` re-validates the decomposition and fails with
/// QLR_ERR_NUMERIC if it does not pass.
#[no_mangle]
pub unsafe extern "C" fn qlr_solve_local_ratio(
    handle: *const QlrInstance,
    with_certificate_check: bool,
    out_json: *mut *mut c_char,
) -> i32 {
    let Some(inst) = instance_ref(handle) else {
        set_error("null instance handle");
        return QLR_ERR_NULL;
    };
    if out_json.is_null() {
        set_error("null output pointer");
        return QLR_ERR_NULL;
    }
    let solved = match inst.kind {
        Kind::Tvc => lr_tvc(inst),
        Kind::Pcvc => lr_tpcvc(inst),
        Kind::Evc => Err(QlrError::KindMismatch(
            "local-ratio solver needs a tvc or pcvc instance".into(),
        )),
    };
    let (state, cert) = match solved {
        Ok(x) => x,
        Err(e) => return fail(e),
    };
    let energy = match evaluate(inst, &state) {
        Ok(e) => e,
        Err(e) => return fail(e),
    };
    let cert_report = if with_certificate_check {
        match certify(inst, &state, &cert) {
            Ok(r) => Some(r),
            Err(e) => return fail(e),
        }
    } else {
        None
    };
    if let Some(r) = &cert_report {
        if !r.pass {
            set_error(&format!("certificate check failed: {}", r.failures.join("; ")));
            return QLR_ERR_NUMERIC;
        }
    }
    let ratios = match local_ratios(inst, &state, &cert) {
        Ok(r) => r,
        Err(e) => return fail(e),
    };
    let text = report_to_json(&Report {
        energy,
        state: Some(&state),
        certificate: Some(&cert),
        local_ratios: Some(ratios),
        cert_report: cert_report.as_ref(),
        exact: None,
        ratio: None,
    });
    export_string(text, out_json)
}

/// Solve an entangled-constraint instance; emits the component report
/// JSON on success.
#[no_mangle]
pub unsafe extern "C" fn qlr_solve_evc(
    handle: *const QlrInstance,
    out_json: *mut *mut c_char,
) -> i32 {
    let Some(inst) = instance_ref(handle) else {
        set_error("null instance handle");
        return QLR_ERR_NULL;
    };
    if out_json.is_null() {
        set_error("null output pointer");
        return QLR_ERR_NULL;
    }
    match solve_evc(inst) {
        Ok(rep) => export_string(evc_report_to_json(&rep, None), out_json),
        Err(e) => fail(e),
    }
}

/// Exact ground energy via the oracle matching the instance kind.
/// Writes the energy to `out_energy`; QLR_ERR_INFEASIBLE if the
/// constraint subspace is empty.
#[no_mangle]
pub unsafe extern "C" fn qlr_exact_ground_energy(
    handle: *const QlrInstance,
    out_energy: *mut f64,
) -> i32 {
    let Some(inst) = instance_ref(handle) else {
        set_error("null instance handle");
        return QLR_ERR_NULL;
    };
    if out_energy.is_null() {
        set_error("null output pointer");
        return QLR_ERR_NULL;
    }
    let rep = match inst.kind {
        Kind::Tvc => ground_energy_tvc(inst),
        Kind::Pcvc => ground_energy_full(inst),
        Kind::Evc => ground_energy_nullspace(inst),
    };
    match rep {
        Ok(r) => match r.ground_energy() {
            Some(e) => {
                *out_energy = e;
                QLR_OK
            }
            None => {
                set_error("constraint subspace is empty");
                QLR_ERR_INFEASIBLE
            }
        },
        Err(e) => fail(e),
    }
}

/// Release a string returned by a solve call.
#[no_mangle]
pub unsafe extern "C" fn qlr_string_free(text: *mut c_char) {
    if !text.is_null() {
        drop(CString::from_raw(text));
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::ptr;

    fn parse(json: &str) -> *mut QlrInstance {
        let c = CString::new(json).unwrap();
        let mut handle: *mut QlrInstance = ptr::null_mut();
        let code = unsafe { qlr_instance_parse(c.as_ptr(), &mut handle) };
        assert_eq!(code, QLR_OK, "{:?}", last_error());
        handle
    }

    fn last_error() -> String {
        unsafe { CStr::from_ptr(qlr_last_error()) }
            .to_string_lossy()
            .into_owned()
    }

    fn classical_edge() -> String {
        qlr::json::instance_to_json(&{
            let mut inst = qlr::Instance::new(Kind::Tvc, 2);
            inst.terms[0] = qlr::LocalTerm::new(1.0, qlr::BlochProjector::ket1(), 0.0);
            inst.terms[1] = qlr::LocalTerm::new(1.0, qlr::BlochProjector::ket1(), 0.0);
            inst.add_edge(qlr::Edge::new(0, 1));
            inst
        })
    }

    #[test]
    fn parse_query_free_round_trip() {
        let h = parse(&classical_edge());
        unsafe {
            assert_eq!(qlr_instance_n(h), 2);
            assert_eq!(qlr_instance_edge_count(h), 1);
            qlr_instance_free(h);
        }
    }

    #[test]
    fn parse_rejects_garbage_with_message() {
        let c = CString::new("{\"kind\":\"tvc\"").unwrap();
        let mut handle: *mut QlrInstance = ptr::null_mut();
        let code = unsafe { qlr_instance_parse(c.as_ptr(), &mut handle) };
        assert_eq!(code, QLR_ERR_PARSE);
        assert!(!last_error().is_empty());
        assert!(handle.is_null());
    }

    #[test]
    fn null_arguments_are_safe() {
        let mut handle: *mut QlrInstance = ptr::null_mut();
        unsafe {
            assert_eq!(qlr_instance_parse(ptr::null(), &mut handle), QLR_ERR_NULL);
            assert_eq!(qlr_instance_n(ptr::null()), -1);
            let mut e = 0.0;
            assert_eq!(qlr_exact_ground_energy(ptr::null(), &mut e), QLR_ERR_NULL);
            qlr_instance_free(ptr::null_mut());
            qlr_string_free(ptr::null_mut());
        }
    }

    #[test]
    fn solve_and_oracle_agree_on_classical_edge() {
        let h = parse(&classical_edge());
        let mut text: *mut c_char = ptr::null_mut();
        let code = unsafe { qlr_solve_local_ratio(h, true, &mut text) };
        assert_eq!(code, QLR_OK, "{:?}", last_error());
        let report = unsafe { CStr::from_ptr(text) }.to_str().unwrap().to_string();
        let value: serde_json::Value = serde_json::from_str(&report).unwrap();
        let energy = value["energy"].as_f64().unwrap();
        let mut exact = f64::NAN;
        unsafe {
            assert_eq!(qlr_exact_ground_energy(h, &mut exact), QLR_OK);
            qlr_string_free(text);
            qlr_instance_free(h);
        }
        assert!((exact - 1.0).abs() < 1e-9);
        assert!(energy <= 2.0 * exact + 1e-9);
    }

    #[test]
    fn evc_solver_through_ffi() {
        let json = "{\"kind\":\"evc\",\"n\":2,\"vertices\":[\
            {\"id\":0,\"c\":1.0,\"bloch\":[0.0,0.0,-1.0],\"offset\":0.0},\
            {\"id\":1,\"c\":1.0,\"bloch\":[0.0,0.0,-1.0],\"offset\":0.0}],\
            \"edges\":[{\"u\":0,\"v\":1}],\
            \"psi\":{\"form\":\"singlet\"},\"offset\":0.0}";
        let h = parse(json);
        let mut text: *mut c_char = ptr::null_mut();
        let code = unsafe { qlr_solve_evc(h, &mut text) };
        assert_eq!(code, QLR_OK, "{:?}", last_error());
        let value: serde_json::Value =
            serde_json::from_str(unsafe { CStr::from_ptr(text) }.to_str().unwrap()).unwrap();
        assert!(value["energy"].as_f64().unwrap().abs() < 1e-9);
        unsafe {
            qlr_string_free(text);
            qlr_instance_free(h);
        }
    }

    #[test]
    fn kind_mismatch_reports_code() {
        let h = parse(&classical_edge());
        let mut text: *mut c_char = ptr::null_mut();
        let code = unsafe { qlr_solve_evc(h, &mut text) };
        assert_eq!(code, QLR_ERR_KIND);
        unsafe { qlr_instance_free(h) };
    }
}
