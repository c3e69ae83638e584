//! The five ANOVA input kernels side by side.
//!
//! Prints the centring function `m(x) = ∫₀¹ k(x, y) dy`, checks that each
//! transformed kernel integrates to one in `y`, and reports the smallest
//! eigenvalue of a small gram matrix.

use setsa::kernels::{AnovaKernel, InputKernelFamily, InputKernelSpec};

fn row_integral(k: &AnovaKernel, x: f64) -> f64 {
    // Composite Simpson on each side of the kink at y = x.
    let simpson = |a: f64, b: f64| {
        if b <= a {
            return 0.0;
        }
        let n = 400;
        let h = (b - a) / n as f64;
        let mut s = k.eval(x, a) + k.eval(x, b);
        for i in 1..n {
            s += if i % 2 == 1 { 4.0 } else { 2.0 } * k.eval(x, a + i as f64 * h);
        }
        s * h / 3.0
    };
    simpson(0.0, x) + simpson(x, 1.0)
}

fn main() -> setsa::Result<()> {
    let theta = 0.29;
    let xs = [0.0, 0.25, 0.5, 0.75, 1.0];
    println!("lengthscale {theta}; m(x) at x = {xs:?}");
    for family in InputKernelFamily::ALL {
        let kernel = AnovaKernel::new(&InputKernelSpec::new(family, theta))?;
        let m: Vec<String> = xs
            .iter()
            .map(|&x| format!("{:.4}", kernel.centring(x)))
            .collect();
        let worst = xs
            .iter()
            .map(|&x| (row_integral(&kernel, x) - 1.0).abs())
            .fold(0.0, f64::max);

        let sample: Vec<f64> = (0..12).map(|i| (i as f64 + 0.5) / 12.0).collect();
        let gram = kernel.gram(&sample)?;
        let mat = nalgebra::DMatrix::from_row_slice(12, 12, gram.entries());
        let min_eig = mat.symmetric_eigen().eigenvalues.min();

        println!(
            "{:<16} m = [{}]  max |∫K dy − 1| = {:.1e}  min eig = {:.2e}",
            family.name(),
            m.join(", "),
            worst,
            min_eig
        );
    }
    Ok(())
}
