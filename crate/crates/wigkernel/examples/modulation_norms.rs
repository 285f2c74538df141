//! Modulation-space norms of a Hermite function for a few weights.

use wigkernel::modnorm::{mod_norm, shubin_sobolev, NormOptions, Weight};
use wigkernel::signal::{hermite, Grid};

fn main() -> wigkernel::Result<()> {
    let g = Grid::new(1, 64)?;
    let opts = NormOptions::default();
    for k in [0, 3, 6] {
        let f = hermite(g, k)?;
        let one = mod_norm(&f, 2.0, 2.0, Weight::One, &opts)?.value;
        let l1 = mod_norm(&f, 1.0, 1.0, Weight::One, &opts)?.value;
        let (q, hs) = shubin_sobolev(&f, 1.0)?;
        println!("h_{k}: M^2 {one:.4}  M^1 {l1:.4}  Q_1 {q:.4}  H^1 {hs:.4}");
    }
    Ok(())
}
