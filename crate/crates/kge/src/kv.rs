//! Flat `key=value` text files used for reports and run manifests.

use std::fs;
use std::path::Path;

use crate::error::{KgeError, Result};

pub fn format(pairs: &[(String, String)]) -> String {
    pairs.iter().map(|(k, v)| format!("{k}={v}\n")).collect()
}

pub fn parse(text: &str) -> Vec<(String, String)> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .filter_map(|l| l.split_once('=').map(|(k, v)| (k.trim().to_owned(), v.trim().to_owned())))
        .collect()
}

pub fn write(path: &Path, pairs: &[(String, String)]) -> Result<()> {
    fs::write(path, format(pairs)).map_err(|e| KgeError::io(path, e))
}

pub fn read(path: &Path) -> Result<Vec<(String, String)>> {
    fs::read_to_string(path).map(|t| parse(&t)).map_err(|e| KgeError::io(path, e))
}

pub fn get<'a>(pairs: &'a [(String, String)], key: &str) -> Option<&'a str> {
    pairs.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
}
