fn main() {
    // Placeholder entry point until the command surface lands.
    eprintln!("meqa: commands not wired up yet");
    std::process::exit(1);
}
