use clap::Parser;

use veto::config::{resolve, Cli};
use veto::pipeline::{write_artifacts, Pipeline};
use veto::report::summarize;

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Err(err) = run(cli) {
        eprintln!("error: {err}");
        let mut source = std::error::Error::source(&*err);
        while let Some(cause) = source {
            eprintln!("  caused by: {cause}");
            source = cause.source();
        }
        std::process::exit(1);
    }
}

fn run(cli: Cli) -> Result<(), Box<dyn std::error::Error>> {
    let cfg = resolve(cli)?;
    let out_dir = cfg.out_dir.clone();
    let pipeline = Pipeline::load(cfg)?;
    let artifacts = pipeline.run()?;
    print!("{}", summarize(&artifacts.report));
    for path in write_artifacts(&out_dir, &artifacts)? {
        println!("wrote {}", path.display());
    }
    Ok(())
}
