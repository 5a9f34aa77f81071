//! Mixed centered differences of the nonlinear solver in the boundary-data
//! parameters: 2, 4 and 8 point stencils for orders 1, 2 and 3.

use rayon::prelude::*;

use crate::error::Result;
use crate::forward::{MinimalGraph, NewtonOptions, NormalConvention};
use crate::pde_core::BoundaryFunction;

/// `sum_{s in {+-1}^n} (prod s) q(sum_i s_i eps f_i) / (2 eps)^n` for any
/// vector-valued `q`.
pub fn mixed_difference<Q>(dirs: &[&BoundaryFunction], eps: f64, q: Q) -> Result<Vec<f64>>
where
    Q: Fn(&BoundaryFunction) -> Result<Vec<f64>> + Sync,
{
    let n = dirs.len();
    let vals: Vec<(f64, Vec<f64>)> = (0..1usize << n)
        .into_par_iter()
        .map(|mask| {
            let mut data = dirs[0].scale(0.0);
            let mut sign = 1.0;
            for (i, f) in dirs.iter().enumerate() {
                let s = if mask >> i & 1 == 1 { -1.0 } else { 1.0 };
                sign *= s;
                data = data.axpy(s * eps, f)?;
            }
            Ok((sign, q(&data)?))
        })
        .collect::<Result<_>>()?;
    let scale = (2.0 * eps).powi(n as i32);
    let len = vals[0].1.len();
    let mut out = vec![0.0; len];
    for (s, v) in &vals {
        for i in 0..len {
            out[i] += s * v[i];
        }
    }
    out.iter_mut().for_each(|x| *x /= scale);
    Ok(out)
}

/// Mixed derivative of the solution field.
pub fn solution_derivative(graph: &MinimalGraph, dirs: &[&BoundaryFunction], eps: f64, opts: &NewtonOptions) -> Result<Vec<f64>> {
    mixed_difference(dirs, eps, |f| graph.solve(f, opts).map(|s| s.u))
}

/// Mixed derivative of the boundary pairing `int f_m Lambda(f) dS` where
/// `weights` are the nodal boundary weights.
pub fn dn_pairing_derivative(
    graph: &MinimalGraph,
    dirs: &[&BoundaryFunction],
    fm: &[f64],
    weights: &[f64],
    eps: f64,
    conv: NormalConvention,
    opts: &NewtonOptions,
) -> Result<f64> {
    let v = mixed_difference(dirs, eps, |f| {
        let sol = graph.solve(f, opts)?;
        let dn = graph.dn_nodal(&sol, f, conv)?;
        Ok(vec![dn.iter().zip(fm).zip(weights).map(|((a, b), w)| a * b * w).sum()])
    })?;
    Ok(v[0])
}

/// Mixed derivative of the nodal DN map.
pub fn dn_derivative(graph: &MinimalGraph, dirs: &[&BoundaryFunction], eps: f64, conv: NormalConvention, opts: &NewtonOptions) -> Result<Vec<f64>> {
    mixed_difference(dirs, eps, |f| {
        let sol = graph.solve(f, opts)?;
        graph.dn_nodal(&sol, f, conv)
    })
}

/// `||a - b||_2 / ||a||_2`.
pub fn relative_l2(a: &[f64], b: &[f64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum();
    let den: f64 = a.iter().map(|x| x * x).sum();
    (num / den).sqrt()
}
