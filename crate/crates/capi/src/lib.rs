//! C ABI for the lattice determinant engine.
//!
//! Handles are opaque pointers owned by the caller and released with the
//! matching `_free` function. Every fallible call reports a status code;
//! output values are written through out-pointers only on `POLYDET_OK`.
//! The header `include/polydet.h` mirrors these declarations.

use polydet::connection::{CutDirection, FlatConnection, PunctureSet};
use polydet::geometry::{build_graph, DomainGraph, LatticeRegion};
use polydet::spectral::SymmetricOperator;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

pub const POLYDET_OK: i32 = 0;
pub const POLYDET_ERR_NULL: i32 = 1;
pub const POLYDET_ERR_PARSE: i32 = 2;
pub const POLYDET_ERR_GEOMETRY: i32 = 3;
pub const POLYDET_ERR_SIGMA: i32 = 4;
pub const POLYDET_ERR_COMPUTE: i32 = 5;
pub const POLYDET_ERR_PANIC: i32 = 6;

pub struct PolydetDomain {
    region: LatticeRegion,
}

pub struct PolydetOperator {
    graph: DomainGraph,
    op: SymmetricOperator,
}

fn set_status(status: *mut i32, code: i32) {
    if !status.is_null() {
        unsafe { *status = code };
    }
}

fn guarded<T>(status: *mut i32, f: impl FnOnce() -> Result<T, i32>) -> Option<T> {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(v)) => {
            set_status(status, POLYDET_OK);
            Some(v)
        }
        Ok(Err(code)) => {
            set_status(status, code);
            None
        }
        Err(_) => {
            set_status(status, POLYDET_ERR_PANIC);
            None
        }
    }
}

/// Version string of the underlying library; static storage, do not free.
#[no_mangle]
pub extern "C" fn polydet_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Parse a domain from its JSON description (`{"loops": [...], "scale": N}`).
/// Returns NULL on failure with `status` set.
#[no_mangle]
pub unsafe extern "C" fn polydet_domain_parse(
    json: *const c_char,
    status: *mut i32,
) -> *mut PolydetDomain {
    guarded(status, || {
        if json.is_null() {
            return Err(POLYDET_ERR_NULL);
        }
        let text = CStr::from_ptr(json)
            .to_str()
            .map_err(|_| POLYDET_ERR_PARSE)?;
        let region = LatticeRegion::parse(text).map_err(|_| POLYDET_ERR_PARSE)?;
        Ok(Box::into_raw(Box::new(PolydetDomain { region })))
    })
    .unwrap_or(ptr::null_mut())
}

/// New handle for the same polygon at a different scale.
#[no_mangle]
pub unsafe extern "C" fn polydet_domain_with_scale(
    domain: *const PolydetDomain,
    scale: i64,
    status: *mut i32,
) -> *mut PolydetDomain {
    guarded(status, || {
        let domain = domain.as_ref().ok_or(POLYDET_ERR_NULL)?;
        let region = domain
            .region
            .with_scale(scale)
            .map_err(|_| POLYDET_ERR_GEOMETRY)?;
        Ok(Box::into_raw(Box::new(PolydetDomain { region })))
    })
    .unwrap_or(ptr::null_mut())
}

/// Number of interior lattice sites, or -1 on error.
#[no_mangle]
pub unsafe extern "C" fn polydet_domain_sites(domain: *const PolydetDomain) -> i64 {
    let mut status = POLYDET_OK;
    guarded(&mut status, || {
        let domain = domain.as_ref().ok_or(POLYDET_ERR_NULL)?;
        let graph = build_graph(&domain.region).map_err(|_| POLYDET_ERR_GEOMETRY)?;
        Ok(graph.n() as i64)
    })
    .unwrap_or(-1)
}

#[no_mangle]
pub unsafe extern "C" fn polydet_domain_free(domain: *mut PolydetDomain) {
    if !domain.is_null() {
        drop(Box::from_raw(domain));
    }
}

/// Assemble the twisted Dirichlet operator. `sigma_doubled` is a flat array
/// of `n_sigma` (x, y) pairs in doubled coordinates; `cut` is 0..3 for
/// +x, -x, +y, -y.
#[no_mangle]
pub unsafe extern "C" fn polydet_operator_new(
    domain: *const PolydetDomain,
    sigma_doubled: *const i64,
    n_sigma: usize,
    cut: i32,
    status: *mut i32,
) -> *mut PolydetOperator {
    guarded(status, || {
        let domain = domain.as_ref().ok_or(POLYDET_ERR_NULL)?;
        let cut = match cut {
            0 => CutDirection::PosX,
            1 => CutDirection::NegX,
            2 => CutDirection::PosY,
            3 => CutDirection::NegY,
            _ => return Err(POLYDET_ERR_SIGMA),
        };
        let punctures: Vec<[i64; 2]> = if n_sigma == 0 {
            vec![]
        } else {
            if sigma_doubled.is_null() {
                return Err(POLYDET_ERR_NULL);
            }
            std::slice::from_raw_parts(sigma_doubled, 2 * n_sigma)
                .chunks_exact(2)
                .map(|c| [c[0], c[1]])
                .collect()
        };
        let graph = build_graph(&domain.region).map_err(|_| POLYDET_ERR_GEOMETRY)?;
        let sigma =
            PunctureSet::new(&domain.region, &punctures).map_err(|_| POLYDET_ERR_SIGMA)?;
        let conn = FlatConnection::build(&graph, sigma, cut);
        let op =
            SymmetricOperator::assemble(&graph, &conn).map_err(|_| POLYDET_ERR_COMPUTE)?;
        Ok(Box::into_raw(Box::new(PolydetOperator { graph, op })))
    })
    .unwrap_or(ptr::null_mut())
}

/// Matrix dimension, or -1 on error.
#[no_mangle]
pub unsafe extern "C" fn polydet_operator_dim(op: *const PolydetOperator) -> i64 {
    op.as_ref().map(|o| o.op.n() as i64).unwrap_or(-1)
}

/// Number of lattice edges, or -1 on error.
#[no_mangle]
pub unsafe extern "C" fn polydet_operator_edges(op: *const PolydetOperator) -> i64 {
    op.as_ref().map(|o| o.graph.edges.len() as i64).unwrap_or(-1)
}

/// Exact log-determinant via sparse factorization.
#[no_mangle]
pub unsafe extern "C" fn polydet_operator_logdet(
    op: *const PolydetOperator,
    out: *mut f64,
) -> i32 {
    let mut status = POLYDET_OK;
    let value = guarded(&mut status, || {
        let op = op.as_ref().ok_or(POLYDET_ERR_NULL)?;
        if out.is_null() {
            return Err(POLYDET_ERR_NULL);
        }
        op.op.logdet().map_err(|_| POLYDET_ERR_COMPUTE)
    });
    if let Some(v) = value {
        *out = v;
    }
    status
}

/// Heat trace at time `t` (dense spectral path; fails above the dense
/// size threshold).
#[no_mangle]
pub unsafe extern "C" fn polydet_operator_heat_trace(
    op: *const PolydetOperator,
    t: f64,
    out: *mut f64,
) -> i32 {
    let mut status = POLYDET_OK;
    let value = guarded(&mut status, || {
        let op = op.as_ref().ok_or(POLYDET_ERR_NULL)?;
        if out.is_null() {
            return Err(POLYDET_ERR_NULL);
        }
        op.op
            .heat_trace(t)
            .map(|p| p.value)
            .map_err(|_| POLYDET_ERR_COMPUTE)
    });
    if let Some(v) = value {
        *out = v;
    }
    status
}

#[no_mangle]
pub unsafe extern "C" fn polydet_operator_free(op: *mut PolydetOperator) {
    if !op.is_null() {
        drop(Box::from_raw(op));
    }
}

/// Zeta-regularized `ζ'(0)` for the continuum Dirichlet rectangle `a x b`.
#[no_mangle]
pub unsafe extern "C" fn polydet_continuum_zeta_prime_zero(
    a: f64,
    b: f64,
    out: *mut f64,
) -> i32 {
    let mut status = POLYDET_OK;
    let value = guarded(&mut status, || {
        if out.is_null() {
            return Err(POLYDET_ERR_NULL);
        }
        if !(a > 0.0 && b > 0.0) {
            return Err(POLYDET_ERR_GEOMETRY);
        }
        polydet::continuum::continuum_zeta_prime_zero(a, b).map_err(|_| POLYDET_ERR_COMPUTE)
    });
    if let Some(v) = value {
        *out = v;
    }
    status
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::ffi::CString;

    const SQUARE: &str = r#"{"loops": [[[0,0],[1,0],[1,1],[0,1]]], "scale": 1}"#;

    #[test]
    fn round_trip_logdet() {
        unsafe {
            let json = CString::new(SQUARE).unwrap();
            let mut status = -1;
            let base = polydet_domain_parse(json.as_ptr(), &mut status);
            assert_eq!(status, POLYDET_OK);
            let scaled = polydet_domain_with_scale(base, 3, &mut status);
            assert_eq!(status, POLYDET_OK);
            assert_eq!(polydet_domain_sites(scaled), 4);

            let op = polydet_operator_new(scaled, ptr::null(), 0, 0, &mut status);
            assert_eq!(status, POLYDET_OK);
            assert_eq!(polydet_operator_dim(op), 4);
            assert_eq!(polydet_operator_edges(op), 4);
            let mut logdet = 0.0;
            assert_eq!(polydet_operator_logdet(op, &mut logdet), POLYDET_OK);
            assert!((logdet - 192f64.ln()).abs() < 1e-12);

            let mut trace = 0.0;
            assert_eq!(polydet_operator_heat_trace(op, 0.0, &mut trace), POLYDET_OK);
            assert!((trace - 4.0).abs() < 1e-12);

            polydet_operator_free(op);
            polydet_domain_free(scaled);
            polydet_domain_free(base);
        }
    }

    #[test]
    fn twisted_annulus_via_ffi() {
        unsafe {
            let json = CString::new(
                r#"{"loops": [[[0,0],[6,0],[6,6],[0,6]], [[2,2],[4,2],[4,4],[2,4]]], "scale": 1}"#,
            )
            .unwrap();
            let mut status = -1;
            let d = polydet_domain_parse(json.as_ptr(), &mut status);
            assert_eq!(status, POLYDET_OK);
            let sigma = [7i64, 7];
            let twisted = polydet_operator_new(d, sigma.as_ptr(), 1, 0, &mut status);
            assert_eq!(status, POLYDET_OK);
            let trivial = polydet_operator_new(d, ptr::null(), 0, 0, &mut status);
            assert_eq!(status, POLYDET_OK);
            let (mut a, mut b) = (0.0, 0.0);
            assert_eq!(polydet_operator_logdet(twisted, &mut a), POLYDET_OK);
            assert_eq!(polydet_operator_logdet(trivial, &mut b), POLYDET_OK);
            assert_ne!(a, b);
            polydet_operator_free(twisted);
            polydet_operator_free(trivial);
            polydet_domain_free(d);
        }
    }

    #[test]
    fn error_paths() {
        unsafe {
            let mut status = -1;
            let bad = CString::new("not json").unwrap();
            assert!(polydet_domain_parse(bad.as_ptr(), &mut status).is_null());
            assert_eq!(status, POLYDET_ERR_PARSE);

            assert!(polydet_domain_parse(ptr::null(), &mut status).is_null());
            assert_eq!(status, POLYDET_ERR_NULL);

            let json = CString::new(SQUARE).unwrap();
            let base = polydet_domain_parse(json.as_ptr(), &mut status);
            let d = polydet_domain_with_scale(base, 4, &mut status);
            polydet_domain_free(base);
            // puncture at integer (even doubled) coordinates is rejected
            let sigma = [2i64, 2];
            assert!(polydet_operator_new(d, sigma.as_ptr(), 1, 0, &mut status).is_null());
            assert_eq!(status, POLYDET_ERR_SIGMA);
            // bad cut code
            assert!(polydet_operator_new(d, ptr::null(), 0, 9, &mut status).is_null());
            assert_eq!(status, POLYDET_ERR_SIGMA);

            let mut out = 0.0;
            assert_eq!(
                polydet_operator_logdet(ptr::null(), &mut out),
                POLYDET_ERR_NULL
            );
            assert_eq!(
                polydet_continuum_zeta_prime_zero(-1.0, 1.0, &mut out),
                POLYDET_ERR_GEOMETRY
            );
            polydet_domain_free(d);
        }
    }

    #[test]
    fn continuum_zeta_value() {
        unsafe {
            let mut out = 0.0;
            assert_eq!(polydet_continuum_zeta_prime_zero(1.0, 1.0, &mut out), POLYDET_OK);
            assert!((out - 0.6102456605288906).abs() < 1e-10);
        }
    }

    #[test]
    fn version_is_nul_terminated() {
        unsafe {
            let v = CStr::from_ptr(polydet_version());
            assert!(!v.to_str().unwrap().is_empty());
        }
    }

    #[test]
    fn header_declares_every_export() {
        let header = include_str!("../include/polydet.h");
        for symbol in [
            "polydet_version",
            "polydet_domain_parse",
            "polydet_domain_with_scale",
            "polydet_domain_sites",
            "polydet_domain_free",
            "polydet_operator_new",
            "polydet_operator_dim",
            "polydet_operator_edges",
            "polydet_operator_logdet",
            "polydet_operator_heat_trace",
            "polydet_operator_free",
            "polydet_continuum_zeta_prime_zero",
        ] {
            assert!(header.contains(symbol), "header missing {}", symbol);
        }
        for code in [
            "POLYDET_OK",
            "POLYDET_ERR_NULL",
            "POLYDET_ERR_PARSE",
            "POLYDET_ERR_GEOMETRY",
            "POLYDET_ERR_SIGMA",
            "POLYDET_ERR_COMPUTE",
            "POLYDET_ERR_PANIC",
        ] {
            assert!(header.contains(code), "header missing {}", code);
        }
    }
}
