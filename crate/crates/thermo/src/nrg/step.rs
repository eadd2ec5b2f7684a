//! Iterative diagonalization: shell assembly, truncation, operator
//! transforms.

use ndarray::{s, Array2};
use ndarray_linalg::Eigh;

use super::{
    NrgError, NrgParams, NrgRun, Sector, SectorBasis, SectorMap, SectorShell, ShellBasis,
    ShellSpectrum,
};

/// Site basis order: empty, up, down, doubly occupied (`f+up f+dn |0>`).
const SITE_Q: [i32; 4] = [-1, 0, 0, 1];
const SITE_SZ2: [i32; 4] = [0, 1, -1, 0];
const SITE_NEL: [f64; 4] = [0.0, 1.0, 1.0, 2.0];

/// `<mu'|f+_sigma|mu>`; the minus sign keeps the doubly occupied state
/// defined as `f+up f+dn |0>`.
fn fdag_site(spin: usize) -> [[f64; 4]; 4] {
    let mut m = [[0.0; 4]; 4];
    if spin == 0 {
        m[1][0] = 1.0;
        m[3][2] = 1.0;
    } else {
        m[2][0] = 1.0;
        m[3][1] = -1.0;
    }
    m
}

const DEGENERACY_TOL: f64 = 1e-10;
const SECTOR_DIM_GUARD: usize = 40_000;

/// Working state carried between iterations.
pub(super) struct IterState {
    /// Chain sites included so far.
    nsites: usize,
    sectors: Vec<IterSector>,
}

struct IterSector {
    sector: Sector,
    /// Rescaled kept eigenvalues (shell-rezeroed).
    evals: Vec<f64>,
    /// Impurity spin in the kept eigenbasis (empty for reference runs).
    sz: Array2<f64>,
    /// `f+_sigma` from this sector into `(q+1, sz2 +- 1)`:
    /// `(target sector position, kept_to x kept_from)`.
    fdag: [Option<(usize, Array2<f64>)>; 2],
}

/// Shell 0: impurity plus site 0 (or the bare site for reference runs).
fn build_h0(params: &NrgParams, with_impurity: bool) -> (IterState, ShellSpectrum) {
    let j = params.j;
    let b = params.b;
    let eps0 = params.chain.onsite.first().copied().unwrap_or(0.0);
    let s0z = [0.0, 0.5, -0.5, 0.0];

    // basis entries: (impurity index, site state); reference runs use a
    // single dummy impurity index
    let imp_states: &[f64] = if with_impurity { &[0.5, -0.5] } else { &[0.0] };
    let mut entries: Vec<(usize, usize)> = Vec::new();
    for is in 0..imp_states.len() {
        for mu in 0..4 {
            entries.push((is, mu));
        }
    }
    let dim = entries.len();
    let mut h = Array2::<f64>::zeros((dim, dim));
    let mut sz_full = Array2::<f64>::zeros((dim, dim));
    for (a, &(is, mu)) in entries.iter().enumerate() {
        let szi = imp_states[is];
        let mut e = eps0 * SITE_NEL[mu] + b * s0z[mu];
        if with_impurity {
            e += j * szi * s0z[mu] + b * szi;
        }
        h[[a, a]] = e;
        sz_full[[a, a]] = szi;
    }
    if with_impurity {
        // spin flips couple |+1/2, dn> and |-1/2, up>
        let a = 2; // is=0, mu=2
        let c = 4 + 1; // is=1, mu=1
        h[[a, c]] += 0.5 * j;
        h[[c, a]] += 0.5 * j;
    }

    let sector_of = |is: usize, mu: usize| -> Sector {
        let sz2_imp = if with_impurity {
            if is == 0 {
                1
            } else {
                -1
            }
        } else {
            0
        };
        Sector {
            q: SITE_Q[mu],
            sz2: sz2_imp + SITE_SZ2[mu],
        }
    };

    let mut index: SectorMap = SectorMap::new();
    let mut members: Vec<Vec<usize>> = Vec::new();
    for (a, &(is, mu)) in entries.iter().enumerate() {
        let sec = sector_of(is, mu);
        let pos = *index.entry(sec).or_insert_with(|| {
            members.push(Vec::new());
            members.len() - 1
        });
        members[pos].push(a);
    }
    let sectors_sorted: Vec<Sector> = index.keys().copied().collect();
    // rebuild positions in sorted order
    let mut index2: SectorMap = SectorMap::new();
    for (pos, &sec) in sectors_sorted.iter().enumerate() {
        index2.insert(sec, pos);
    }

    struct Raw {
        sector: Sector,
        members: Vec<usize>,
        evals: Vec<f64>,
        u: Array2<f64>,
    }
    let mut raw: Vec<Raw> = Vec::new();
    for &sec in &sectors_sorted {
        let m = &members[index[&sec]];
        let d = m.len();
        let mut hb = Array2::<f64>::zeros((d, d));
        for (i, &a) in m.iter().enumerate() {
            for (k, &c) in m.iter().enumerate() {
                hb[[i, k]] = h[[a, c]];
            }
        }
        let (vals, vecs) = hb.eigh(ndarray_linalg::UPLO::Lower).expect("shell-0 eigh");
        raw.push(Raw {
            sector: sec,
            members: m.clone(),
            evals: vals.to_vec(),
            u: vecs,
        });
    }
    let e0 = raw
        .iter()
        .flat_map(|r| r.evals.iter().copied())
        .fold(f64::INFINITY, f64::min);

    let mut iter_sectors = Vec::new();
    let mut shell_sectors = Vec::new();
    let mut basis_sectors = Vec::new();
    for r in &raw {
        let d = r.evals.len();
        let evals: Vec<f64> = r.evals.iter().map(|e| e - e0).collect();
        // impurity spin into the eigenbasis
        let mut sz_b = Array2::<f64>::zeros((d, d));
        for (i, &a) in r.members.iter().enumerate() {
            sz_b[[i, i]] = sz_full[[a, a]];
        }
        let m1 = sz_b.dot(&r.u);
        let sz_eig = r.u.t().dot(&m1);
        let sz_diag: Vec<f64> = (0..d).map(|c| sz_eig[[c, c]]).collect();
        shell_sectors.push(SectorShell {
            sector: r.sector,
            evals: evals.clone(),
            kept: d,
            sz_diag,
        });
        basis_sectors.push(SectorBasis {
            sector: r.sector,
            parents: r
                .members
                .iter()
                .map(|&a| (entries[a].0, 0usize, entries[a].1 as u8))
                .collect(),
            u: r.u.clone(),
        });
        iter_sectors.push(IterSector {
            sector: r.sector,
            evals,
            sz: sz_eig,
            fdag: [None, None],
        });
    }
    // f+_sigma of site 0 in the eigenbasis
    for spin in 0..2 {
        let f = fdag_site(spin);
        let dsz = if spin == 0 { 1 } else { -1 };
        for from_pos in 0..sectors_sorted.len() {
            let from = sectors_sorted[from_pos];
            let to = Sector {
                q: from.q + 1,
                sz2: from.sz2 + dsz,
            };
            let Some(&to_pos) = index2.get(&to) else {
                continue;
            };
            let rf = &raw[from_pos];
            let rt = &raw[to_pos];
            let mut op = Array2::<f64>::zeros((rt.members.len(), rf.members.len()));
            for (i, &a) in rt.members.iter().enumerate() {
                let (is_a, mu_a) = entries[a];
                for (k, &c) in rf.members.iter().enumerate() {
                    let (is_c, mu_c) = entries[c];
                    if is_a == is_c {
                        op[[i, k]] = f[mu_a][mu_c];
                    }
                }
            }
            let t1 = op.dot(&rf.u);
            let op_eig = rt.u.t().dot(&t1);
            iter_sectors[from_pos].fdag[spin] = Some((to_pos, op_eig));
        }
    }

    let spectrum = ShellSpectrum {
        index: 0,
        scale: 1.0,
        e0_abs: e0,
        sectors: shell_sectors,
        basis: if params.track_rdm {
            Some(ShellBasis {
                sectors: basis_sectors,
            })
        } else {
            None
        },
    };
    (
        IterState {
            nsites: 1,
            sectors: iter_sectors,
        },
        spectrum,
    )
}

/// Group of product states sharing (parent sector, site state).
#[derive(Clone, Copy)]
struct Group {
    parent: usize,
    mu: usize,
    offset: usize,
    len: usize,
}

/// One iteration: add the next chain site, diagonalize, truncate.
fn iterate(
    prev: &IterState,
    params: &NrgParams,
    shell_index: usize,
    prev_scale: f64,
    with_impurity: bool,
    e0_abs_prev: f64,
) -> Result<(IterState, ShellSpectrum), NrgError> {
    let t_new = params.chain.hoppings[shell_index - 1];
    // a decoupled site (t = 0) keeps the previous scale
    let scale = if t_new > 0.0 { t_new } else { prev_scale };
    let ratio = prev_scale / scale;
    let tbar = t_new / scale;
    let eps_bar = params
        .chain
        .onsite
        .get(shell_index)
        .copied()
        .unwrap_or(0.0)
        / scale;

    // enumerate product sectors
    let mut index: SectorMap = SectorMap::new();
    let mut groups: Vec<Vec<Group>> = Vec::new();
    let mut dims: Vec<usize> = Vec::new();
    for (p_idx, p) in prev.sectors.iter().enumerate() {
        let k = p.evals.len();
        if k == 0 {
            continue;
        }
        for mu in 0..4 {
            let ns = Sector {
                q: p.sector.q + SITE_Q[mu],
                sz2: p.sector.sz2 + SITE_SZ2[mu],
            };
            let pos = *index.entry(ns).or_insert_with(|| {
                groups.push(Vec::new());
                dims.push(0);
                groups.len() - 1
            });
            groups[pos].push(Group {
                parent: p_idx,
                mu,
                offset: dims[pos],
                len: k,
            });
            dims[pos] += k;
        }
    }
    // rebuild in sorted sector order
    let sectors_sorted: Vec<Sector> = index.keys().copied().collect();
    let order: Vec<usize> = sectors_sorted.iter().map(|s| index[s]).collect();
    let groups: Vec<Vec<Group>> = order.iter().map(|&i| groups[i].clone()).collect();
    let dims: Vec<usize> = order.iter().map(|&i| dims[i]).collect();
    let mut index: SectorMap = SectorMap::new();
    for (pos, &sec) in sectors_sorted.iter().enumerate() {
        index.insert(sec, pos);
    }
    if let Some(&d) = dims.iter().max() {
        if d > SECTOR_DIM_GUARD {
            return Err(NrgError::SectorOverflow(d));
        }
    }

    // fermion parity of the previous-shell states (impurity carries none)
    let parity = |p: &IterSector| -> f64 {
        if (p.sector.q + prev.nsites as i32).rem_euclid(2) == 0 {
            1.0
        } else {
            -1.0
        }
    };

    // assemble and diagonalize each sector block
    struct Diag {
        evals: Vec<f64>,
        u: Array2<f64>,
    }
    let mut diags: Vec<Diag> = Vec::with_capacity(groups.len());
    for (pos, grp) in groups.iter().enumerate() {
        let d = dims[pos];
        let mut h = Array2::<f64>::zeros((d, d));
        // locate groups by (parent, mu)
        let find = |parent: usize, mu: usize| -> Option<&Group> {
            grp.iter().find(|g| g.parent == parent && g.mu == mu)
        };
        for g in grp {
            let p = &prev.sectors[g.parent];
            // rescaled previous energies plus the new site's level
            for i in 0..g.len {
                h[[g.offset + i, g.offset + i]] =
                    ratio * p.evals[i] + eps_bar * SITE_NEL[g.mu];
            }
            // hopping f+_N f_{N+1} out of this group
            let sign = parity(p);
            for spin in 0..2 {
                let Some((to_parent, fmat)) = &p.fdag[spin] else {
                    continue;
                };
                let f = fdag_site(spin);
                // <mu1|f_sigma|mu2> = f[mu2][mu1]
                for mu1 in 0..4 {
                    let val = f[g.mu][mu1];
                    if val == 0.0 {
                        continue;
                    }
                    let Some(g1) = find(*to_parent, mu1) else {
                        continue;
                    };
                    let coeff = tbar * sign * val;
                    for i1 in 0..g1.len {
                        for i2 in 0..g.len {
                            let v = coeff * fmat[[i1, i2]];
                            h[[g1.offset + i1, g.offset + i2]] += v;
                            h[[g.offset + i2, g1.offset + i1]] += v;
                        }
                    }
                }
            }
        }
        let (vals, vecs) = h.eigh(ndarray_linalg::UPLO::Lower)?;
        diags.push(Diag {
            evals: vals.to_vec(),
            u: vecs,
        });
    }

    // global truncation with degeneracy completion
    let mut all: Vec<f64> = diags.iter().flat_map(|d| d.evals.iter().copied()).collect();
    all.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let e0 = all[0];
    let cutoff = if all.len() > params.n_keep {
        let c = all[params.n_keep - 1];
        c + DEGENERACY_TOL * c.abs().max(1.0)
    } else {
        f64::INFINITY
    };

    // transforms into the new eigenbasis
    let mut new_sectors: Vec<IterSector> = Vec::with_capacity(groups.len());
    let mut shell_sectors: Vec<SectorShell> = Vec::with_capacity(groups.len());
    let mut basis_sectors: Vec<SectorBasis> = Vec::with_capacity(groups.len());
    for (pos, grp) in groups.iter().enumerate() {
        let d = dims[pos];
        let diag = &diags[pos];
        let kept = diag.evals.iter().take_while(|&&e| e <= cutoff).count();
        let evals: Vec<f64> = diag.evals.iter().map(|e| e - e0).collect();

        // impurity spin: block diagonal over groups
        let (sz_eig_kept, sz_diag) = if with_impurity {
            let mut m1 = Array2::<f64>::zeros((d, d));
            for g in grp {
                let p = &prev.sectors[g.parent];
                // rows of this group in product space times sz block
                let ublock = diag.u.slice(s![g.offset..g.offset + g.len, ..]);
                let prod = p.sz.dot(&ublock);
                m1.slice_mut(s![g.offset..g.offset + g.len, ..])
                    .assign(&prod);
            }
            let sz_diag: Vec<f64> = (0..d)
                .map(|c| {
                    let mut acc = 0.0;
                    for r in 0..d {
                        acc += diag.u[[r, c]] * m1[[r, c]];
                    }
                    acc
                })
                .collect();
            let u_kept = diag.u.slice(s![.., 0..kept]);
            let sz_kept = u_kept.t().dot(&m1.slice(s![.., 0..kept]));
            (sz_kept, sz_diag)
        } else {
            (Array2::zeros((kept, kept)), vec![0.0; d])
        };

        shell_sectors.push(SectorShell {
            sector: sectors_sorted[pos],
            evals: evals.clone(),
            kept,
            sz_diag,
        });
        if params.track_rdm {
            let parents: Vec<(usize, usize, u8)> = grp
                .iter()
                .flat_map(|g| (0..g.len).map(move |i| (g.parent, i, g.mu as u8)))
                .collect();
            basis_sectors.push(SectorBasis {
                sector: sectors_sorted[pos],
                parents,
                u: diag.u.clone(),
            });
        }
        new_sectors.push(IterSector {
            sector: sectors_sorted[pos],
            evals: evals[..kept].to_vec(),
            sz: sz_eig_kept,
            fdag: [None, None],
        });
    }

    // f+ of the newly added site, in the kept eigenbasis
    let parity_vec: Vec<f64> = prev.sectors.iter().map(parity).collect();
    for spin in 0..2 {
        let f = fdag_site(spin);
        let dsz = if spin == 0 { 1 } else { -1 };
        for from_pos in 0..sectors_sorted.len() {
            let to = Sector {
                q: sectors_sorted[from_pos].q + 1,
                sz2: sectors_sorted[from_pos].sz2 + dsz,
            };
            let Some(&to_pos) = index.get(&to) else {
                continue;
            };
            let (df, dt) = (dims[from_pos], dims[to_pos]);
            let kept_f = new_sectors[from_pos].evals.len();
            let kept_t = new_sectors[to_pos].evals.len();
            if kept_f == 0 || kept_t == 0 {
                continue;
            }
            let mut op = Array2::<f64>::zeros((dt, df));
            let to_groups = &groups[to_pos];
            for g in &groups[from_pos] {
                for mu1 in 0..4 {
                    let val = f[mu1][g.mu];
                    if val == 0.0 {
                        continue;
                    }
                    let Some(g1) = to_groups
                        .iter()
                        .find(|t| t.parent == g.parent && t.mu == mu1)
                    else {
                        continue;
                    };
                    let v = parity_vec[g.parent] * val;
                    for i in 0..g.len {
                        op[[g1.offset + i, g.offset + i]] += v;
                    }
                }
            }
            let uf = diags[from_pos].u.slice(s![.., 0..kept_f]);
            let ut = diags[to_pos].u.slice(s![.., 0..kept_t]);
            let t1 = op.dot(&uf);
            let op_eig = ut.t().dot(&t1);
            new_sectors[from_pos].fdag[spin] = Some((to_pos, op_eig));
        }
    }

    let spectrum = ShellSpectrum {
        index: shell_index,
        scale,
        e0_abs: e0_abs_prev + e0 * scale,
        sectors: shell_sectors,
        basis: if params.track_rdm {
            Some(ShellBasis {
                sectors: basis_sectors,
            })
        } else {
            None
        },
    };
    Ok((
        IterState {
            nsites: prev.nsites + 1,
            sectors: new_sectors,
        },
        spectrum,
    ))
}

/// Drive the full iteration.
pub(super) fn run(params: &NrgParams, with_impurity: bool) -> Result<NrgRun, NrgError> {
    let (mut state, shell0) = build_h0(params, with_impurity);
    let mut shells = vec![shell0];
    let mut truncated = false;
    for n in 1..=params.n_max {
        let prev_scale = shells[n - 1].scale;
        let e0_abs = shells[n - 1].e0_abs;
        let (next, spectrum) = iterate(&state, params, n, prev_scale, with_impurity, e0_abs)?;
        if spectrum.n_kept() < spectrum.n_states() {
            truncated = true;
        }
        state = next;
        shells.push(spectrum);
    }
    Ok(NrgRun {
        params: params.clone(),
        with_impurity,
        shells,
        truncated,
        warnings: Vec::new(),
    })
}
