use boxworld::num::Rat;
use boxworld::optimizer::SymmetricScan;
use boxworld::process::ProcessDims;
use boxworld::Scalar;
use std::io::Write;
use std::time::Instant;

fn main() {
    let t0 = Instant::now();
    let scan_q = SymmetricScan::<Rat>::new(ProcessDims::all(2)).unwrap();
    println!("rational prepare {:?}", t0.elapsed());
    let t0 = Instant::now();
    let scan_f = SymmetricScan::<f64>::new(ProcessDims::all(2)).unwrap();
    println!("float prepare {:?}", t0.elapsed());
    std::io::stdout().flush().unwrap();
    let mut worst = 0.0f64;
    for k in 0..25u64 {
        let i = (k * 524287 + 11) % 1048576;
        let vq = scan_q.value_at(i).unwrap().to_f64_lossy();
        let vf = scan_f.value_at(i).unwrap();
        let d = (vq - vf).abs();
        if d > worst { worst = d; }
        assert!(d < 1e-7, "index {i}: rational {vq} vs float {vf}");
    }
    println!("25 indices agree across backends; worst gap {worst:.2e}");
}
