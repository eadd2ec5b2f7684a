//! Small-chain NRG checks against dense Jordan-Wigner diagonalization.

use ndarray::Array2;
use ndarray_linalg::Eigh;
use thermo::bath::WilsonChain;
use thermo::nrg::{self, NrgParams};

fn chain(hoppings: Vec<f64>) -> WilsonChain {
    WilsonChain {
        lambda: 2.5,
        onsite: vec![0.0; hoppings.len() + 1],
        hoppings,
        dos_ref: "test".into(),
    }
}

fn untruncated(j: f64, b: f64, hoppings: Vec<f64>, track_rdm: bool) -> NrgParams {
    let mut p = NrgParams::new(j, b, chain(hoppings));
    p.n_keep = 1_000_000;
    p.track_rdm = track_rdm;
    p
}

/// Dense oracle: impurity x n sites, fermions via Jordan-Wigner strings.
struct Brute {
    evals: Vec<f64>,
    /// diagonal of S_I^z in the eigenbasis
    sz_diag: Vec<f64>,
}

impl Brute {
    fn new(j: f64, b: f64, hoppings: &[f64]) -> Brute {
        let nsites = hoppings.len() + 1;
        let nmodes = 2 * nsites;
        let fdim = 1usize << nmodes;
        let dim = 2 * fdim;

        // fermion annihilation with JW sign; mode k = 2*site + spin
        let cop = |k: usize| -> Array2<f64> {
            let mut m = Array2::<f64>::zeros((fdim, fdim));
            for state in 0..fdim {
                if state & (1 << k) != 0 {
                    let target = state & !(1 << k);
                    let sign = ((state & ((1 << k) - 1)).count_ones() % 2 == 0) as i32 * 2 - 1;
                    m[[target, state]] = sign as f64;
                }
            }
            m
        };
        let c: Vec<Array2<f64>> = (0..nmodes).map(cop).collect();

        let mut h_f = Array2::<f64>::zeros((fdim, fdim));
        // chain hopping
        for (n, &t) in hoppings.iter().enumerate() {
            for sp in 0..2 {
                let (k1, k2) = (2 * n + sp, 2 * (n + 1) + sp);
                let hop = c[k1].t().dot(&c[k2]) + c[k2].t().dot(&c[k1]);
                h_f = h_f + t * hop;
            }
        }
        let n_up = c[0].t().dot(&c[0]);
        let n_dn = c[1].t().dot(&c[1]);
        let s0z = 0.5 * (&n_up - &n_dn);
        let s0p = c[0].t().dot(&c[1]);
        let s0m = s0p.t().to_owned();

        // impurity factor: index 0 = up, 1 = down
        let mut h = Array2::<f64>::zeros((dim, dim));
        for imp in 0..2 {
            let szi = if imp == 0 { 0.5 } else { -0.5 };
            for r in 0..fdim {
                for q in 0..fdim {
                    let mut v = h_f[[r, q]] + (j * szi + b) * s0z[[r, q]];
                    if r == q {
                        v += b * szi;
                    }
                    h[[imp * fdim + r, imp * fdim + q]] += v;
                }
            }
        }
        // spin flips: (J/2)(S_I^+ S_0^- + S_I^- S_0^+)
        for r in 0..fdim {
            for q in 0..fdim {
                h[[r, fdim + q]] += 0.5 * j * s0m[[r, q]];
                h[[fdim + r, q]] += 0.5 * j * s0p[[r, q]];
            }
        }

        let (vals, vecs) = h.eigh(ndarray_linalg::UPLO::Lower).unwrap();
        let mut sz_diag = vec![0.0; dim];
        for k in 0..dim {
            let mut acc = 0.0;
            for r in 0..dim {
                let szi = if r < fdim { 0.5 } else { -0.5 };
                acc += vecs[[r, k]] * szi * vecs[[r, k]];
            }
            sz_diag[k] = acc;
        }
        Brute {
            evals: vals.to_vec(),
            sz_diag,
        }
    }

    fn magnetization(&self, t: f64) -> f64 {
        let e0 = self.evals[0];
        let mut z = 0.0;
        let mut m = 0.0;
        for (e, sz) in self.evals.iter().zip(&self.sz_diag) {
            let w = (-(e - e0) / t).exp();
            z += w;
            m += sz * w;
        }
        m / z
    }
}

#[test]
fn h0_spectrum_matches_the_two_site_oracle() {
    // shell 0 is exactly the narrow-band two-site model
    for (j, b) in [(1.0, 0.0), (1.0, 0.5), (0.0, 0.7), (5.0, 0.3)] {
        let params = untruncated(j, b, vec![0.1], false);
        let run = nrg::solve(&params).unwrap();
        let shell0 = &run.shells[0];
        let mut nrg_evals: Vec<f64> = shell0
            .sectors
            .iter()
            .flat_map(|s| s.evals.iter().copied())
            .collect();
        nrg_evals.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut expected: Vec<f64> = thermo::nbl::levels(j, b)
            .iter()
            .map(|l| l.energy)
            .collect();
        let e0 = expected.iter().cloned().fold(f64::INFINITY, f64::min);
        for e in expected.iter_mut() {
            *e -= e0;
        }
        expected.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(nrg_evals.len(), 8);
        for (a, e) in nrg_evals.iter().zip(&expected) {
            assert!((a - e).abs() < 1e-13, "j={j} b={b}: {a} vs {e}");
        }
    }
    // B = 0: singlet-triplet splitting J
    let params = untruncated(1.0, 0.0, vec![0.1], false);
    let run = nrg::solve(&params).unwrap();
    let mut evals: Vec<f64> = run.shells[0]
        .sectors
        .iter()
        .flat_map(|s| s.evals.iter().copied())
        .collect();
    evals.sort_by(|a, b| a.partial_cmp(b).unwrap());
    // singlet at the bottom, triplet at the top: splitting J
    assert!((evals[7] - evals[0] - 1.0).abs() < 1e-13);
    assert!((evals[7] - evals[5]).abs() < 1e-13); // triplet degeneracy
}

#[test]
fn decoupled_site_leaves_the_spectrum_unchanged() {
    let j = 0.8;
    let b = 0.2;
    let base = untruncated(j, b, vec![0.5], false);
    let run1 = nrg::solve(&base).unwrap();
    let mut two = untruncated(j, b, vec![0.5, 0.0], false);
    two.n_max = 2;
    let run2 = nrg::solve(&two).unwrap();
    // every shell-1 level reappears fourfold, energies unchanged
    let mut e1: Vec<f64> = run1.shells[1]
        .sectors
        .iter()
        .flat_map(|s| s.evals.iter().copied())
        .collect();
    e1.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut e2: Vec<f64> = run2.shells[2]
        .sectors
        .iter()
        .flat_map(|s| s.evals.iter().copied())
        .collect();
    e2.sort_by(|a, b| a.partial_cmp(b).unwrap());
    assert_eq!(e2.len(), 4 * e1.len());
    for (k, &e) in e1.iter().enumerate() {
        for r in 0..4 {
            assert!(
                (e2[4 * k + r] - e).abs() < 1e-12,
                "level {k} copy {r}: {} vs {e}",
                e2[4 * k + r]
            );
        }
    }
}

#[test]
fn three_shell_spectrum_and_magnetization_match_brute_force() {
    let j = 0.4;
    let b = 0.07;
    let hoppings = vec![0.566, 0.34, 0.21];
    let params = untruncated(j, b, hoppings.clone(), false);
    let run = nrg::solve(&params).unwrap();
    assert!(!run.truncated);
    let brute = Brute::new(j, b, &hoppings);

    let last = run.shells.last().unwrap();
    let mut nrg_evals: Vec<f64> = last
        .sectors
        .iter()
        .flat_map(|s| s.evals.iter().map(|e| e * last.scale))
        .collect();
    nrg_evals.sort_by(|a, b| a.partial_cmp(b).unwrap());
    assert_eq!(nrg_evals.len(), 2 * 4usize.pow(4));
    let e0 = brute.evals[0];
    for (a, e) in nrg_evals.iter().zip(brute.evals.iter().map(|e| e - e0)) {
        assert!((a - e).abs() < 1e-9, "{a} vs {e}");
    }

    // thermal magnetization across six decades of temperature
    let ts: Vec<f64> = (0..25)
        .map(|i| 10f64.powf(1.0 - 4.0 * i as f64 / 24.0))
        .collect();
    let thermo_pts = nrg::exact_thermo(&run, &ts).unwrap();
    for (t, m, _) in thermo_pts {
        let reference = brute.magnetization(t);
        assert!(
            (m - reference).abs() < 1e-9,
            "T={t}: {m} vs {reference}"
        );
    }
}

#[test]
fn jordan_wigner_oracle_self_consistency() {
    // anticommutators of the JW matrices: {c_k, c+_l} = delta_kl
    let nmodes = 6;
    let fdim = 1 << nmodes;
    let cop = |k: usize| -> Array2<f64> {
        let mut m = Array2::<f64>::zeros((fdim, fdim));
        for state in 0..fdim {
            if state & (1 << k) != 0 {
                let target = state & !(1 << k);
                let sign = ((state & ((1usize << k) - 1)).count_ones() % 2 == 0) as i32 * 2 - 1;
                m[[target, state]] = sign as f64;
            }
        }
        m
    };
    for k in 0..nmodes {
        for l in 0..nmodes {
            let ck = cop(k);
            let cl = cop(l);
            let anti = ck.dot(&cl.t()) + cl.t().dot(&ck);
            for r in 0..fdim {
                for q in 0..fdim {
                    let expect = if k == l && r == q { 1.0 } else { 0.0 };
                    assert!(
                        (anti[[r, q]] - expect).abs() < 1e-12,
                        "{{c_{k}, c+_{l}}} at ({r},{q})"
                    );
                }
            }
            let anti2 = ck.dot(&cl) + cl.dot(&ck);
            assert!(anti2.iter().all(|v| v.abs() < 1e-12));
        }
    }
}

/// Reconstruct the NRG eigenbasis in the full product space and compare
/// the implied last-site creation operator against the JW matrix.
#[test]
fn reconstructed_fermion_operator_matches_jordan_wigner() {
    let j = 0.6;
    let b = 0.11;
    let hoppings = vec![0.43, 0.19];
    let params = untruncated(j, b, hoppings.clone(), true);
    let run = nrg::solve(&params).unwrap();

    // full ordering: (imp, mu_0, mu_1, ...): index = ((imp*4 + mu0)*4 + mu1)...
    // shell k basis columns -> vectors in the full space
    let nshells = run.shells.len();
    let mut full_dim = 2usize;
    let mut vmats: Vec<Array2<f64>> = Vec::new(); // per shell: full_dim x n_states
    let mut col_index: Vec<Vec<(usize, usize)>> = Vec::new(); // (sector, i) per global col
    for k in 0..nshells {
        let basis = run.shells[k].basis.as_ref().unwrap();
        full_dim *= 4;
        let nstates: usize = basis.sectors.iter().map(|s| s.u.ncols()).sum();
        let mut v = Array2::<f64>::zeros((full_dim, nstates));
        let mut cols = Vec::new();
        let mut col = 0;
        for (sec_idx, sec) in basis.sectors.iter().enumerate() {
            for c in 0..sec.u.ncols() {
                for (r, &(p, i, mu)) in sec.parents.iter().enumerate() {
                    let w = sec.u[[r, c]];
                    if w == 0.0 {
                        continue;
                    }
                    if k == 0 {
                        // p is the impurity state index
                        let idx = p * 4 + mu as usize;
                        v[[idx, col]] += w;
                    } else {
                        // parent state (sector p, kept i) = previous global col
                        let prev_cols = &col_index[k - 1];
                        let prev_v = &vmats[k - 1];
                        let pcol = prev_cols
                            .iter()
                            .position(|&(s, ii)| s == p && ii == i)
                            .unwrap();
                        for pr in 0..prev_v.nrows() {
                            let amp = prev_v[[pr, pcol]];
                            if amp != 0.0 {
                                v[[pr * 4 + mu as usize, col]] += w * amp;
                            }
                        }
                    }
                }
                cols.push((sec_idx, c));
                col += 1;
            }
        }
        // note: col_index must map (sector, kept i) pairs only
        vmats.push(v);
        col_index.push(cols);
    }

    // NRG's claim: f+_{1,up} acting on (shell-0 state x |mu>) is
    // parity(shell0 state) * |state> x f+|mu>. Build it in the full space
    // from the reconstructed shell-0 vectors and compare with JW.
    let v0 = &vmats[0];
    let n0 = v0.ncols();
    let full1 = 2 * 16; // imp x site0 x site1
    let mut f_nrg = Array2::<f64>::zeros((full1, full1));
    // parity of a shell-0 state: (-1)^(Q + 1)
    let basis0 = run.shells[0].basis.as_ref().unwrap();
    let mut q_of_col = Vec::new();
    for sec in &basis0.sectors {
        for _ in 0..sec.u.ncols() {
            q_of_col.push(sec.sector.q);
        }
    }
    let fdag_up = {
        let mut m = [[0.0f64; 4]; 4];
        m[1][0] = 1.0;
        m[3][2] = 1.0;
        m
    };
    for col in 0..n0 {
        let parity = if (q_of_col[col] + 1).rem_euclid(2) == 0 {
            1.0
        } else {
            -1.0
        };
        for mu in 0..4 {
            for mu2 in 0..4 {
                if fdag_up[mu2][mu] == 0.0 {
                    continue;
                }
                // |col x mu> -> parity * f[mu2][mu] |col x mu2>
                for r1 in 0..8 {
                    for r2 in 0..8 {
                        f_nrg[[r1 * 4 + mu2, r2 * 4 + mu]] +=
                            parity * fdag_up[mu2][mu] * v0[[r1, col]] * v0[[r2, col]];
                    }
                }
            }
        }
    }
    // JW f+_{site1, up} on imp x 8-dim fermion space: mode k = 2
    let nmodes = 4;
    let fdim = 1 << nmodes;
    let mut fj = Array2::<f64>::zeros((full1, full1));
    for imp in 0..2 {
        for state in 0..fdim {
            let k = 2;
            if state & (1usize << k) == 0 {
                let target = state | (1 << k);
                let sign = ((state & ((1usize << k) - 1)).count_ones() % 2 == 0) as i32 * 2 - 1;
                // map occupation state to (mu0, mu1): bits (0,1) site0,
                // (2,3) site1; mu from (n_up, n_dn)
                let mu_of = |s: usize, site: usize| -> usize {
                    let up = (s >> (2 * site)) & 1;
                    let dn = (s >> (2 * site + 1)) & 1;
                    match (up, dn) {
                        (0, 0) => 0,
                        (1, 0) => 1,
                        (0, 1) => 2,
                        _ => 3,
                    }
                };
                let row = (imp * 4 + mu_of(target, 0)) * 4 + mu_of(target, 1);
                let colx = (imp * 4 + mu_of(state, 0)) * 4 + mu_of(state, 1);
                fj[[row, colx]] += sign as f64;
            }
        }
    }
    // JW occupation convention: |updn> = f+up f+dn |0> means the up mode
    // is created last <-> bit order (up = lower JW index). Compare.
    let mut max_dev = 0.0f64;
    for r in 0..full1 {
        for c in 0..full1 {
            max_dev = max_dev.max((f_nrg[[r, c]] - fj[[r, c]]).abs());
        }
    }
    assert!(max_dev < 1e-12, "max deviation {max_dev}");
}

#[test]
fn free_impurity_thermodynamics() {
    // J = 0, B = 0: zero magnetization, impurity entropy ln 2 at every T
    let hoppings = vec![0.57, 0.34, 0.2, 0.12];
    let mut params = untruncated(0.0, 0.0, hoppings, false);
    params.interleave = true;
    let run = nrg::solve(&params).unwrap();
    let reference = nrg::solve_reference(&params).unwrap();
    let curve = nrg::thermodynamics(&run, Some(&reference), "h").unwrap();
    for p in &curve.points {
        assert!(p.m.abs() < 1e-12, "T={}: m={}", p.t, p.m);
        let s = p.s_imp.unwrap();
        assert!(
            (s - std::f64::consts::LN_2).abs() < 1e-9,
            "T={}: s_imp={s}",
            p.t
        );
    }
}

#[test]
fn polarized_impurity_at_strong_field() {
    // B >> J, T << B: saturated moment, vanishing impurity entropy
    let hoppings = vec![0.5, 0.25, 0.12, 0.06, 0.03];
    let mut params = untruncated(0.05, 0.6, hoppings, false);
    params.interleave = false;
    let run = nrg::solve(&params).unwrap();
    let reference = nrg::solve_reference(&params).unwrap();
    let curve = nrg::thermodynamics(&run, Some(&reference), "h").unwrap();
    let last = curve.points.last().unwrap();
    assert!(last.t < 0.1);
    assert!(last.m < -0.49, "m = {}", last.m);
    assert!(last.s_imp.unwrap().abs() < 0.02);
}

#[test]
fn zero_field_magnetization_vanishes_under_truncation() {
    let hoppings: Vec<f64> = (0..12)
        .map(|n| thermo::bath::flat_band_hopping(n, 2.5, 1.0))
        .collect();
    let mut params = NrgParams::new(0.15, 0.0, chain(hoppings));
    params.n_keep = 150;
    let run = nrg::solve(&params).unwrap();
    assert!(run.truncated);
    let curve = nrg::thermodynamics(&run, None, "h").unwrap();
    for p in &curve.points {
        assert!(p.m.abs() < 1e-12, "T={}: m={}", p.t, p.m);
    }
}

#[test]
fn rdm_negativity_limits() {
    // separable state at J = 0
    let hoppings = vec![0.5, 0.3, 0.18];
    let params = untruncated(0.0, 0.3, hoppings.clone(), true);
    let run = nrg::solve(&params).unwrap();
    let neg = nrg::rdm_negativity_local(&run, 0.3).unwrap();
    assert!(neg < 1e-10, "separable negativity {neg}");

    // strong local coupling: maximal impurity/site-0 entanglement
    let params = untruncated(5.0, 0.0, hoppings, true);
    let run = nrg::solve(&params).unwrap();
    let t = run.shells.last().unwrap().scale / params.beta_bar;
    let neg = nrg::rdm_negativity_local(&run, t).unwrap();
    assert!((neg - 0.5).abs() < 1e-2, "singlet negativity {neg}");
}

#[test]
fn truncation_convergence_on_a_real_chain() {
    // doubling the kept states barely moves the magnetization
    let hoppings: Vec<f64> = (0..14)
        .map(|n| thermo::bath::flat_band_hopping(n, 2.5, 1.0))
        .collect();
    let mut p1 = NrgParams::new(0.3, 1e-3, chain(hoppings));
    p1.n_keep = 300;
    p1.interleave = false;
    let mut p2 = p1.clone();
    p2.n_keep = 600;
    let c1 = nrg::thermodynamics(&nrg::solve(&p1).unwrap(), None, "a").unwrap();
    let c2 = nrg::thermodynamics(&nrg::solve(&p2).unwrap(), None, "b").unwrap();
    for (a, b) in c1.points.iter().zip(&c2.points) {
        assert!((a.t - b.t).abs() < 1e-12 * a.t);
        assert!(
            (a.m - b.m).abs() < 1e-3,
            "T={}: {} vs {}",
            a.t,
            a.m,
            b.m
        );
    }
}
