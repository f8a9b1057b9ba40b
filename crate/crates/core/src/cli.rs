pub fn run(_args: impl Iterator<Item = String>) -> i32 {
    0
}
