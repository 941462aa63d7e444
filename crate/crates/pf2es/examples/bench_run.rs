use pf2es::bo::{run_bo, AcquisitionKind, RunConfig};

fn main() {
    let t = std::time::Instant::now();
    let mut cfg = RunConfig::new("vlmop2", AcquisitionKind::Pf2es, 40, 0);
    cfg.calibration_every = 0;
    let record = run_bo(&cfg).unwrap();
    println!(
        "vlmop2 pf2es 40 iters: {:.1}s, final lhd {:.3}, aborted: {:?}",
        t.elapsed().as_secs_f64(),
        record.iterations.last().unwrap().log_hv_difference,
        record.aborted
    );
    let t = std::time::Instant::now();
    let mut cfg = RunConfig::new("c-branincurrin", AcquisitionKind::Pf2es, 10, 0);
    cfg.calibration_every = 0;
    let record = run_bo(&cfg).unwrap();
    println!(
        "c-branincurrin pf2es 10 iters: {:.1}s, final lhd {:.3}",
        t.elapsed().as_secs_f64(),
        record.iterations.last().unwrap().log_hv_difference
    );
}
