fn main() { println!("magnomech"); }
