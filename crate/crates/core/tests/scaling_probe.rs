//! Manual eigensolver probe at experiment scale.
use cutwave_core::linalg::{eigenvalues, Mat};

#[test]
#[ignore = "matrix replay"]
fn replay_dumped_matrix() {
    let n = 3300usize;
    let buf = std::fs::read("/tmp/asmat_v2.bin").unwrap();
    assert_eq!(buf.len(), n * n * 8);
    let mut a = Mat::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let k = (i * n + j) * 8;
            a[(i, j)] = f64::from_le_bytes(buf[k..k + 8].try_into().unwrap());
        }
    }
    let t0 = std::time::Instant::now();
    match eigenvalues(&a) {
        Ok(evs) => {
            let mabs = evs.iter().map(|z| z.norm()).fold(0.0f64, f64::max);
            let mre = evs.iter().map(|z| z.re.abs()).fold(0.0f64, f64::max);
            eprintln!("ok in {:?}: max|l| = {mabs:.4}, max|Re| = {mre:.3e}", t0.elapsed());
        }
        Err(e) => eprintln!("FAILED: {e} after {:?}", t0.elapsed()),
    }
}
