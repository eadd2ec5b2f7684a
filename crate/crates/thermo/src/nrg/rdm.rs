//! Reduced density matrix of impurity plus site 0 by backward
//! propagation of the shell thermal state, and the local negativity.

use ndarray::Array2;
use ndarray_linalg::Eigh;

use super::{NrgError, NrgRun};

/// Negativity between the impurity and the local bath orbital at
/// temperature `t`.
///
/// The thermal density matrix of the shell nearest to `t` (all states,
/// kept and discarded) is pulled back to the impurity + site-0 space
/// through the stored basis transforms, and the partial transpose on the
/// impurity gives the negativity. Requires a run built with `track_rdm`.
pub fn rdm_negativity_local(run: &NrgRun, t: f64) -> Result<f64, NrgError> {
    if !run.with_impurity {
        return Err(NrgError::BadParams(
            "negativity needs an impurity run".into(),
        ));
    }
    if run.shells.iter().any(|s| s.basis.is_none()) {
        return Err(NrgError::NoBasisStored);
    }
    let start = run.shell_for_temperature(t)?;
    let shell = &run.shells[start];

    // thermal state on the full shell, block-diagonal over sectors
    let x = shell.scale / t;
    let mut z = 0.0;
    for sec in &shell.sectors {
        for &e in &sec.evals {
            z += (-e * x).exp();
        }
    }
    let mut rho: Vec<Array2<f64>> = shell
        .sectors
        .iter()
        .map(|sec| {
            let d = sec.evals.len();
            let mut block = Array2::<f64>::zeros((d, d));
            for (i, &e) in sec.evals.iter().enumerate() {
                block[[i, i]] = (-e * x).exp() / z;
            }
            block
        })
        .collect();

    // pull back through shells start, start-1, ..., 1
    for k in (1..=start).rev() {
        let basis = run.shells[k].basis.as_ref().expect("checked above");
        let prev = &run.shells[k - 1];
        let mut rho_prev: Vec<Array2<f64>> = prev
            .sectors
            .iter()
            .map(|sec| Array2::<f64>::zeros((sec.kept, sec.kept)))
            .collect();
        for (sec_basis, block) in basis.sectors.iter().zip(&rho) {
            // over to the product basis, truncated to the states the
            // density matrix lives on
            let d = block.nrows();
            let u = sec_basis.u.slice(ndarray::s![.., 0..d]);
            let half = u.dot(block);
            let prod = half.dot(&u.t());
            for (r1, &(p1, i1, mu1)) in sec_basis.parents.iter().enumerate() {
                for (r2, &(p2, i2, mu2)) in sec_basis.parents.iter().enumerate() {
                    if mu1 == mu2 && p1 == p2 {
                        rho_prev[p1][[i1, i2]] += prod[[r1, r2]];
                    }
                }
            }
        }
        rho = rho_prev;
    }

    // assemble the 8x8 in the |impurity> x |site 0> product basis
    let basis0 = run.shells[0].basis.as_ref().expect("checked above");
    let mut rho8 = Array2::<f64>::zeros((8, 8));
    for (sec_basis, block) in basis0.sectors.iter().zip(&rho) {
        let d = block.nrows();
        let u = sec_basis.u.slice(ndarray::s![.., 0..d]);
        let half = u.dot(block);
        let prod = half.dot(&u.t());
        for (r1, &(is1, _, mu1)) in sec_basis.parents.iter().enumerate() {
            for (r2, &(is2, _, mu2)) in sec_basis.parents.iter().enumerate() {
                rho8[[is1 * 4 + mu1 as usize, is2 * 4 + mu2 as usize]] += prod[[r1, r2]];
            }
        }
    }

    let trace: f64 = (0..8).map(|i| rho8[[i, i]]).sum();
    if (trace - 1.0).abs() > 1e-6 {
        return Err(NrgError::RdmTrace((trace - 1.0).abs()));
    }

    // partial transpose on the impurity
    let mut pt = Array2::<f64>::zeros((8, 8));
    for is1 in 0..2 {
        for is2 in 0..2 {
            for mu1 in 0..4 {
                for mu2 in 0..4 {
                    pt[[is2 * 4 + mu1, is1 * 4 + mu2]] = rho8[[is1 * 4 + mu1, is2 * 4 + mu2]];
                }
            }
        }
    }
    let (vals, _) = pt.eigh(ndarray_linalg::UPLO::Lower)?;
    Ok(0.5 * (vals.iter().map(|v| v.abs()).sum::<f64>() - 1.0))
}
