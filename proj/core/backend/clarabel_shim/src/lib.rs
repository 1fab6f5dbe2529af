//! C ABI over the Clarabel interior-point solver.
//!
//! Problem form: minimize 0.5 x'Px + q'x subject to Ax + s = b, s in K,
//! with P given as its upper triangle and both matrices in CSC form.
#![allow(non_snake_case)]

use clarabel::algebra::CscMatrix;
use clarabel::solver::{
    DefaultSettingsBuilder, DefaultSolver, IPSolver, SolverStatus, SupportedConeT,
};
use std::panic;
use std::slice;

#[repr(C)]
pub struct ShimSettings {
    pub max_iter: u32,
    pub time_limit: f64,
    pub tol_feas: f64,
    pub tol_gap_abs: f64,
    pub tol_gap_rel: f64,
    pub tol_infeas_abs: f64,
    pub tol_infeas_rel: f64,
    pub verbose: u8,
}

#[repr(C)]
pub struct ShimInfo {
    pub status: i32,
    pub iterations: u32,
    pub solve_time: f64,
    pub obj_val: f64,
    pub r_prim: f64,
    pub r_dual: f64,
}

pub const CONE_ZERO: u8 = 0;
pub const CONE_NONNEG: u8 = 1;
pub const CONE_SOC: u8 = 2;
pub const CONE_PSD_TRIANGLE: u8 = 3;

fn status_code(s: SolverStatus) -> i32 {
    match s {
        SolverStatus::Unsolved => 0,
        SolverStatus::Solved => 1,
        SolverStatus::PrimalInfeasible => 2,
        SolverStatus::DualInfeasible => 3,
        SolverStatus::AlmostSolved => 4,
        SolverStatus::AlmostPrimalInfeasible => 5,
        SolverStatus::AlmostDualInfeasible => 6,
        SolverStatus::MaxIterations => 7,
        SolverStatus::MaxTime => 8,
        SolverStatus::NumericalError => 9,
        SolverStatus::InsufficientProgress => 10,
        SolverStatus::CallbackTerminated => 11,
    }
}

unsafe fn csc(m: usize, n: usize, colptr: *const usize, rowval: *const usize, nzval: *const f64) -> CscMatrix<f64> {
    let cp = slice::from_raw_parts(colptr, n + 1).to_vec();
    let nnz = cp[n];
    let (rv, nv) = if nnz == 0 {
        (Vec::new(), Vec::new())
    } else {
        (
            slice::from_raw_parts(rowval, nnz).to_vec(),
            slice::from_raw_parts(nzval, nnz).to_vec(),
        )
    };
    CscMatrix::new(m, n, cp, rv, nv)
}

/// Returns 0 on a completed solve (inspect `info.status`), negative on setup
/// failure or panic.
#[no_mangle]
pub unsafe extern "C" fn clarabel_shim_solve(
    n: usize,
    m: usize,
    p_colptr: *const usize,
    p_rowval: *const usize,
    p_nzval: *const f64,
    q: *const f64,
    a_colptr: *const usize,
    a_rowval: *const usize,
    a_nzval: *const f64,
    b: *const f64,
    ncones: usize,
    cone_kind: *const u8,
    cone_dim: *const usize,
    settings: *const ShimSettings,
    x_out: *mut f64,
    info: *mut ShimInfo,
) -> i32 {
    let result = panic::catch_unwind(|| {
        let P = csc(n, n, p_colptr, p_rowval, p_nzval);
        let A = csc(m, n, a_colptr, a_rowval, a_nzval);
        let qv = slice::from_raw_parts(q, n).to_vec();
        let bv = if m == 0 { Vec::new() } else { slice::from_raw_parts(b, m).to_vec() };
        let kinds = slice::from_raw_parts(cone_kind, ncones);
        let dims = slice::from_raw_parts(cone_dim, ncones);
        let mut cones: Vec<SupportedConeT<f64>> = Vec::with_capacity(ncones);
        for (k, d) in kinds.iter().zip(dims.iter()) {
            cones.push(match *k {
                CONE_ZERO => SupportedConeT::ZeroConeT(*d),
                CONE_NONNEG => SupportedConeT::NonnegativeConeT(*d),
                CONE_SOC => SupportedConeT::SecondOrderConeT(*d),
                CONE_PSD_TRIANGLE => SupportedConeT::PSDTriangleConeT(*d),
                _ => return -2,
            });
        }
        let s = &*settings;
        let built = DefaultSettingsBuilder::default()
            .max_iter(s.max_iter)
            .time_limit(s.time_limit)
            .tol_feas(s.tol_feas)
            .tol_gap_abs(s.tol_gap_abs)
            .tol_gap_rel(s.tol_gap_rel)
            .tol_infeas_abs(s.tol_infeas_abs)
            .tol_infeas_rel(s.tol_infeas_rel)
            .verbose(s.verbose != 0)
            .direct_solve_method("faer".to_owned())
            .max_threads(1)
            .build();
        let built = match built {
            Ok(v) => v,
            Err(_) => return -3,
        };
        let mut solver = match DefaultSolver::new(&P, &qv, &A, &bv, &cones, built) {
            Ok(v) => v,
            Err(_) => return -4,
        };
        solver.solve();
        let sol = &solver.solution;
        let out = slice::from_raw_parts_mut(x_out, n);
        out.copy_from_slice(&sol.x);
        let inf = &mut *info;
        inf.status = status_code(sol.status);
        inf.iterations = sol.iterations;
        inf.solve_time = sol.solve_time;
        inf.obj_val = sol.obj_val;
        inf.r_prim = sol.r_prim;
        inf.r_dual = sol.r_dual;
        0
    });
    result.unwrap_or(-1)
}
