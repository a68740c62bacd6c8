use std::process::ExitCode;

use clap::Parser;
use maci_cli::{execute, Cli, Command, EXIT_USAGE};
use maci_service::{bind_address, serve, AppState};

fn run_server(bind: Option<&str>) -> i32 {
    let addr = bind_address(bind);
    let runtime = match tokio::runtime::Runtime::new() {
        Ok(rt) => rt,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_USAGE;
        }
    };
    runtime.block_on(async {
        let listener = match tokio::net::TcpListener::bind(&addr).await {
            Ok(l) => l,
            Err(e) => {
                eprintln!("error: cannot bind {addr}: {e}");
                return EXIT_USAGE;
            }
        };
        println!("listening on {}", listener.local_addr().map(|a| a.to_string()).unwrap_or(addr));
        match serve(listener, AppState::default()).await {
            Ok(()) => 0,
            Err(e) => {
                eprintln!("error: {e}");
                1
            }
        }
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match &cli.command {
        Command::Serve { bind } => run_server(bind.as_deref()),
        command => execute(command, &mut std::io::stdout()),
    };
    ExitCode::from(code as u8)
}
