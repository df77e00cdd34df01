use dula_core::rula::tables_json;
use sha2::{Digest, Sha256};

fn main() {
    let json = serde_json::to_string(&tables_json()).unwrap();
    let digest = Sha256::digest(json.as_bytes());
    let hex: String = digest.iter().map(|b| format!("{b:02x}")).collect();
    println!("{hex}");
}
