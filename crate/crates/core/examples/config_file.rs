//! Driving the command-line front end from a TOML run configuration.

fn main() {
    let dir = std::env::temp_dir();
    let config = dir.join("heavytail_example.toml");
    std::fs::write(
        &config,
        "[run]\nseed = 42\nworkers = 2\n\n[model]\nmodel = \"rank1gauss\"\nd = 2\nb = 8\neta = 1.3\n\n[alpha]\nsamples = 100000\n",
    )
    .unwrap();
    let out = dir.join("heavytail_example_alpha.csv");
    let code = heavytail::cli::run(["heavytail", "--config", config.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    println!("exit code {code}");
    print!("{}", std::fs::read_to_string(&out).unwrap());
}
