use thermo::bath::{discretize_log, wilson_chain, ChainPrecision, DosSpec};
use thermo::metrology::tk_operational_entropy;
use thermo::nrg::{self, NrgParams};

fn main() {
    let t0 = std::time::Instant::now();
    let spec = DosSpec::flat(1.0);
    let disc = discretize_log(&spec, 2.5, 40).unwrap();
    let chain = wilson_chain(&disc, 32, ChainPrecision::Wide).unwrap();
    println!("chain built in {:?} ({} hoppings)", t0.elapsed(), chain.hoppings.len());
    for j in [0.3, 0.5] {
        let t1 = std::time::Instant::now();
        let mut params = NrgParams::new(j, 0.0, chain.clone());
        params.n_max = 30;
        let run = nrg::solve(&params).unwrap();
        let reference = nrg::solve_reference(&params).unwrap();
        let curve = nrg::thermodynamics(&run, Some(&reference), "smoke").unwrap();
        let tk = tk_operational_entropy(&curve).unwrap();
        println!("J={j}: T_K = {:.3e} (paper: {})  [{:?}]", tk.value,
                 if j == 0.3 { "4e-4" } else { "9e-3" }, t1.elapsed());
        if j == 0.3 {
            for p in curve.points.iter().step_by(6) {
                println!("   T={:.3e} m={:+.2e} S_imp/ln2={:.4}", p.t, p.m,
                         p.s_imp.unwrap() / std::f64::consts::LN_2);
            }
        }
    }
}
