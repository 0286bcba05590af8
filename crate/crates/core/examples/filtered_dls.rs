//! Gain of the filtered damped inverse along the smallest singular direction
//! as that singular value shrinks through the threshold.

use nalgebra::DMatrix;
use waam_coord::singularity::{damped_gain, DlsConfig, SvdDecomposition};

fn main() -> waam_coord::Result<()> {
    let cfg = DlsConfig::default();
    println!("kappa {}, threshold {}", cfg.kappa, cfg.sigma_threshold);
    println!("{:>10} {:>12} {:>12} {:>12}", "sigma", "kappa_eff^2", "filtered", "1/sigma");
    for sigma in [0.2, 0.1, 0.05, 0.04, 0.02, 0.01, 0.005, 1e-3, 1e-5, 0.0] {
        let k2 = cfg.effective_damping_sq(sigma);
        let inv = if sigma > 0.0 { format!("{:12.3}", 1.0 / sigma) } else { format!("{:>12}", "inf") };
        println!("{sigma:10.5} {k2:12.3e} {:12.3} {inv}", damped_gain(sigma, k2));
    }

    // Only the smallest direction is touched.
    let j = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![3.0, 1.0, 0.5, 0.01]));
    let svd = SvdDecomposition::new(&j)?;
    println!("\ngains on diag(3, 1, 0.5, 0.01): {:.4?}", svd.gains(&cfg).as_slice());
    Ok(())
}
