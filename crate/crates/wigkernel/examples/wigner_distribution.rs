//! Wigner distribution and STFT of a coherent state, with a log heatmap.

use wigkernel::io::save_field_pgm;
use wigkernel::signal::{coherent_state, Grid};
use wigkernel::transforms::{stft, wigner};

fn main() -> wigkernel::Result<()> {
    let g = Grid::new(1, 64)?;
    let f = coherent_state(g, 0.5, -0.75);
    let w = wigner(&f, &f)?;
    let v = stft(&f, &coherent_state(g, 0.0, 0.0))?;

    let (i, peak) = w.values.iter().enumerate().max_by(|a, b| a.1.norm().total_cmp(&b.1.norm())).unwrap();
    println!("wigner lattice {} points, peak {:.4} at {:?}", w.values.len(), peak.norm(), w.point(i));
    println!("stft lattice {} points, freq step {:.4}", v.values.len(), v.xi_axes[0].step);

    let out = std::env::temp_dir().join("coherent_wigner.pgm");
    save_field_pgm(&out, &w, true)?;
    println!("heatmap written to {}", out.display());
    Ok(())
}
