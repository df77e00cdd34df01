//! RULA lookup tables A, B, and C.
//!
//! Transcription source: the published RULA employee assessment worksheet of
//! McAtamney & Corlett, "RULA: a survey method for the investigation of
//! work-related upper limb disorders", Applied Ergonomics 24(2), 1993.
//! Entries are copied verbatim; a checksum test over the JSON export guards
//! against accidental edits.
//!
//! Indexing is zero-based: `TABLE_A[upper_arm-1][lower_arm-1][wrist-1][twist-1]`.

/// Arm/wrist posture table: upper arm (1–6) × lower arm (1–3) ×
/// wrist (1–4) × wrist twist (1–2).
pub const TABLE_A: [[[[u8; 2]; 4]; 3]; 6] = [
    // upper arm 1
    [
        [[1, 2], [2, 2], [2, 3], [3, 3]],
        [[2, 2], [2, 2], [3, 3], [3, 3]],
        [[2, 3], [3, 3], [3, 3], [4, 4]],
    ],
    // upper arm 2
    [
        [[2, 3], [3, 3], [3, 4], [4, 4]],
        [[3, 3], [3, 3], [3, 4], [4, 4]],
        [[3, 4], [4, 4], [4, 4], [5, 5]],
    ],
    // upper arm 3
    [
        [[3, 3], [4, 4], [4, 4], [5, 5]],
        [[3, 4], [4, 4], [4, 4], [5, 5]],
        [[4, 4], [4, 4], [4, 5], [5, 5]],
    ],
    // upper arm 4
    [
        [[4, 4], [4, 4], [4, 5], [5, 5]],
        [[4, 4], [4, 4], [4, 5], [5, 5]],
        [[4, 4], [4, 5], [5, 5], [6, 6]],
    ],
    // upper arm 5
    [
        [[5, 5], [5, 5], [5, 6], [6, 7]],
        [[5, 6], [6, 6], [6, 7], [7, 7]],
        [[6, 6], [6, 7], [7, 7], [7, 8]],
    ],
    // upper arm 6
    [
        [[7, 7], [7, 7], [7, 8], [8, 9]],
        [[8, 8], [8, 8], [8, 9], [9, 9]],
        [[9, 9], [9, 9], [9, 9], [9, 9]],
    ],
];

/// Neck/trunk/leg posture table: neck (1–6) × trunk (1–6) × legs (1–2).
pub const TABLE_B: [[[u8; 2]; 6]; 6] = [
    // neck 1
    [[1, 3], [2, 3], [3, 4], [5, 5], [6, 6], [7, 7]],
    // neck 2
    [[2, 3], [2, 3], [4, 5], [5, 5], [6, 7], [7, 7]],
    // neck 3
    [[3, 3], [3, 4], [4, 5], [5, 6], [6, 7], [7, 7]],
    // neck 4
    [[5, 5], [5, 6], [6, 7], [7, 7], [7, 7], [8, 8]],
    // neck 5
    [[7, 7], [7, 7], [7, 8], [8, 8], [8, 8], [8, 8]],
    // neck 6
    [[8, 8], [8, 8], [8, 8], [8, 9], [9, 9], [9, 9]],
];

/// Grand score table: score C (1–8, capped) × score D (1–7, capped).
pub const TABLE_C: [[u8; 7]; 8] = [
    [1, 2, 3, 3, 4, 5, 5],
    [2, 2, 3, 4, 4, 5, 5],
    [3, 3, 3, 4, 4, 5, 6],
    [3, 3, 3, 4, 5, 6, 6],
    [4, 4, 4, 5, 6, 7, 7],
    [4, 4, 5, 6, 6, 7, 7],
    [5, 5, 6, 6, 7, 7, 7],
    [5, 5, 6, 7, 7, 7, 7],
];

/// Looks up table A with 1-based worksheet scores.
pub fn table_a(upper_arm: u8, lower_arm: u8, wrist: u8, wrist_twist: u8) -> u8 {
    TABLE_A[upper_arm as usize - 1][lower_arm as usize - 1][wrist as usize - 1]
        [wrist_twist as usize - 1]
}

/// Looks up table B with 1-based worksheet scores.
pub fn table_b(neck: u8, trunk: u8, legs: u8) -> u8 {
    TABLE_B[neck as usize - 1][trunk as usize - 1][legs as usize - 1]
}

/// Looks up table C; inputs above the table extent saturate (score C at 8,
/// score D at 7) exactly as the worksheet's "8+" / "7+" rows do.
pub fn table_c(score_c: u8, score_d: u8) -> u8 {
    let c = score_c.clamp(1, 8) as usize;
    let d = score_d.clamp(1, 7) as usize;
    TABLE_C[c - 1][d - 1]
}

/// JSON export of all three tables, field order fixed, for external audit.
pub fn tables_json() -> serde_json::Value {
    serde_json::json!({
        "schema_version": 1,
        "source": "RULA employee assessment worksheet (McAtamney & Corlett 1993)",
        "table_a": {
            "dims": ["upper_arm 1-6", "lower_arm 1-3", "wrist 1-4", "wrist_twist 1-2"],
            "entries": TABLE_A,
        },
        "table_b": {
            "dims": ["neck 1-6", "trunk 1-6", "legs 1-2"],
            "entries": TABLE_B,
        },
        "table_c": {
            "dims": ["score_c 1-8", "score_d 1-7"],
            "entries": TABLE_C,
        },
    })
}
