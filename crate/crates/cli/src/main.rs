use std::process::ExitCode;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let env_config = std::env::var(agnlab::CONFIG_ENV).ok();
    let code = agnlab::main_with(
        std::env::args_os(),
        env_config.as_deref(),
        &mut std::io::stdout().lock(),
        &mut std::io::stderr().lock(),
    );
    ExitCode::from(code)
}
