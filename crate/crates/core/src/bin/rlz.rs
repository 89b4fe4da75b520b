use std::io::Write;

/// Printing and comparing very deep terms recurses, so the work runs on a
/// thread with a large stack.
const STACK: usize = 1 << 30;

fn main() {
    let out = std::thread::Builder::new()
        .stack_size(STACK)
        .spawn(|| rlz::driver::dispatch(std::env::args_os()))
        .expect("spawn worker")
        .join()
        .expect("worker panicked");
    print!("{}", out.stdout);
    eprint!("{}", out.stderr);
    let _ = std::io::stdout().flush();
    std::process::exit(out.code);
}
