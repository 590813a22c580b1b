//! Whitespace-delimited atom files: `name x y z Q sigma epsilon` per line,
//! `#` starts a comment line.

use std::collections::HashSet;
use std::path::Path;

use crate::error::{Error, Result};
use crate::site::Atom;

pub fn parse_atoms(text: &str) -> Result<Vec<Atom>> {
    let mut atoms = Vec::new();
    let mut seen = HashSet::new();
    for (k, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 7 {
            return Err(Error::Parse {
                line: k + 1,
                msg: format!("expected 7 fields (name x y z Q sigma epsilon), found {}", fields.len()),
            });
        }
        let mut num = [0.0; 6];
        for (slot, text) in num.iter_mut().zip(&fields[1..]) {
            let v: f64 = text.parse().map_err(|_| Error::Parse {
                line: k + 1,
                msg: format!("{text:?} is not a number"),
            })?;
            if !v.is_finite() {
                return Err(Error::Parse {
                    line: k + 1,
                    msg: format!("{text:?} is not finite"),
                });
            }
            *slot = v;
        }
        let atom = Atom {
            name: fields[0].to_string(),
            position: [num[0], num[1], num[2]],
            charge: num[3],
            sigma: num[4],
            epsilon: num[5],
        };
        atom.validate().map_err(|e| Error::Parse {
            line: k + 1,
            msg: e.to_string(),
        })?;
        if !seen.insert(atom.position.map(f64::to_bits)) {
            log::warn!("line {}: atom {} duplicates an earlier position", k + 1, atom.name);
        }
        atoms.push(atom);
    }
    Ok(atoms)
}

pub fn load_atoms(path: &Path) -> Result<Vec<Atom>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_atoms(&text)
}

pub fn format_atoms(atoms: &[Atom]) -> String {
    let mut out = String::from("# name x y z Q sigma epsilon\n");
    for a in atoms {
        let name = if a.name.is_empty() { "ATOM" } else { &a.name };
        out.push_str(&format!(
            "{name} {} {} {} {} {} {}\n",
            a.position[0], a.position[1], a.position[2], a.charge, a.sigma, a.epsilon
        ));
    }
    out
}
