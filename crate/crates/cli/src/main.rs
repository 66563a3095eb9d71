mod args;

use clap::Parser;

use ltesim::plot::write_plot;
use ltesim::sim::{run_sweep, write_csv};

fn main() {
    if let Err(err) = run() {
        eprintln!("error: {err:#}");
        std::process::exit(1);
    }
}

fn run() -> anyhow::Result<()> {
    let args = args::Args::parse();
    let spec = args.to_spec()?;
    eprintln!(
        "sweep: n_fft={} n_used={} cp={} {}x{} {} | L={:?} snr={:?} dB | {:?} | {} frames, seed {}",
        spec.base.n_fft,
        spec.base.n_used,
        spec.base.cp_len,
        spec.base.n_tx,
        spec.base.n_rx,
        spec.base.modulation,
        spec.channel_lengths,
        spec.snr_grid_db,
        spec.estimators,
        spec.frames,
        spec.seed
    );
    let result = run_sweep(&spec)?;
    write_csv(&result, &args.out)?;
    eprintln!(
        "wrote {} rows to {} in {:.2}s",
        result.rows.len(),
        args.out.display(),
        result.runtime_s
    );
    if let Some(plot_path) = &args.emit_plot {
        write_plot(&result, plot_path)?;
        eprintln!("wrote plot to {}", plot_path.display());
    }
    Ok(())
}
