use epdiff_core::*;
use epdiff_core::commutator::*;
use epdiff_core::field::SpectralField;
use epdiff_core::operator::SpectralOperator;
use epdiff_core::sampling::*;
use epdiff_core::symbol::{SymbolSpec, SeparableTerm, MultiplierDef};

fn main() {
    let (q, r, n) = (2.0, 1.0, 2usize);
    let order = r + n as f64 - 1.0;
    // per-sample ratios across N for the same sample indices
    let mut per_n: Vec<Vec<f64>> = Vec::new();
    for npts in [32usize, 64, 128] {
        let g = TorusGrid::new(1, npts).unwrap();
        let fine = TorusGrid::new(1, 2*npts).unwrap();
        let xf = SpectralField::from_values_fn(g, 1, |p, _| 1.0 + 0.5*(2.0*std::f64::consts::PI*p[0]).sin());
        let spec = SymbolSpec::separable(vec![SeparableTerm{x_factor: xf.embed(fine).unwrap(), multiplier: MultiplierDef::BesselPower(order/2.0)}], order);
        let p = SpectralOperator::realize(&spec, fine, 1).unwrap();
        let mut ratios = Vec::new();
        for i in 0..200u64 {
            let mut rng = sample_rng(42, i);
            let fs: Vec<SpectralField> = (0..n).map(|_| random_hq_field(g, 1, q, &mut rng).embed(fine).unwrap()).collect();
            let w = random_hq_field(g, 1, q - 1.0, &mut rng).embed(fine).unwrap();
            ratios.push(commutator_ratio(&p, &fs, &w, q, r).unwrap().unwrap());
        }
        per_n.push(ratios);
    }
    // top five at N=64
    let mut idx: Vec<usize> = (0..200).collect();
    idx.sort_by(|&a,&b| per_n[1][b].partial_cmp(&per_n[1][a]).unwrap());
    for &i in idx.iter().take(5) {
        println!("sample {i}: N32 {:.4}  N64 {:.4}  N128 {:.4}", per_n[0][i], per_n[1][i], per_n[2][i]);
    }
}
