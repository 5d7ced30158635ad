// SPDX-License-Identifier: Apache-2.0

use std::fmt;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Rgb(pub u8, pub u8, pub u8);

impl Rgb {
    pub fn hex(self) -> String {
        format!("#{:02x}{:02x}{:02x}", self.0, self.1, self.2)
    }

    /// Parse `#rrggbb`.
    pub fn from_hex(s: &str) -> Option<Rgb> {
        let h = s.strip_prefix('#')?;
        if h.len() != 6 || !h.is_ascii() {
            return None;
        }
        let byte = |i: usize| u8::from_str_radix(&h[i..i + 2], 16).ok();
        Some(Rgb(byte(0)?, byte(2)?, byte(4)?))
    }
}

impl fmt::Display for Rgb {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.hex())
    }
}

/// Fixed categorical table; pairwise CIE76 distances are all at least 25.
pub const BASE_PALETTE: [Rgb; 12] = [
    Rgb(0x1f, 0x77, 0xb4),
    Rgb(0xff, 0x7f, 0x0e),
    Rgb(0x2c, 0xa0, 0x2c),
    Rgb(0xd6, 0x27, 0x28),
    Rgb(0x94, 0x67, 0xbd),
    Rgb(0x8c, 0x56, 0x4b),
    Rgb(0xe3, 0x77, 0xc2),
    Rgb(0x7f, 0x7f, 0x7f),
    Rgb(0xbc, 0xbd, 0x22),
    Rgb(0x17, 0xbe, 0xcf),
    Rgb(0x39, 0x3b, 0x79),
    Rgb(0xfd, 0xd0, 0xa2),
];

pub const RESIDUAL_GREY: Rgb = Rgb(0xd0, 0xd0, 0xd0);

const GOLDEN_CONJUGATE: f64 = 0.618_033_988_749_894_8;
const SATURATION: f64 = 0.65;
const LIGHTNESS: f64 = 0.5;

fn hsl_to_rgb(h: f64, s: f64, l: f64) -> Rgb {
    let c = (1.0 - (2.0 * l - 1.0).abs()) * s;
    let hp = h * 6.0;
    let x = c * (1.0 - (hp % 2.0 - 1.0).abs());
    let (r, g, b) = match hp as u32 {
        0 => (c, x, 0.0),
        1 => (x, c, 0.0),
        2 => (0.0, c, x),
        3 => (0.0, x, c),
        4 => (x, 0.0, c),
        _ => (c, 0.0, x),
    };
    let m = l - c / 2.0;
    let to8 = |v: f64| ((v + m) * 255.0).round().clamp(0.0, 255.0) as u8;
    Rgb(to8(r), to8(g), to8(b))
}

/// `n` categorical colors: the fixed table first, then golden-ratio hue steps
/// whose starting hue depends on `seed`.
pub fn assign_colors(n: usize, seed: u64) -> Vec<Rgb> {
    let start = ((seed % 1_000_003) as f64 * GOLDEN_CONJUGATE).fract();
    (0..n)
        .map(|i| {
            if i < BASE_PALETTE.len() {
                BASE_PALETTE[i]
            } else {
                let step = (i - BASE_PALETTE.len()) as f64;
                let h = (start + step * GOLDEN_CONJUGATE).fract();
                hsl_to_rgb(h, SATURATION, LIGHTNESS)
            }
        })
        .collect()
}
