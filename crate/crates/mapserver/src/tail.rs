//! Following a growing file line by line.

use std::fs::File;
use std::io::{Read, Seek, SeekFrom};
use std::path::PathBuf;

/// Returns complete lines appended to a file since the last poll. A
/// trailing partial line is held back until its newline arrives; a file
/// that shrank is read again from the start.
pub struct LineTail {
    path: PathBuf,
    offset: u64,
    pending: Vec<u8>,
}

impl LineTail {
    pub fn new(path: impl Into<PathBuf>, from_start: bool) -> std::io::Result<Self> {
        let path = path.into();
        let offset = if from_start {
            0
        } else {
            std::fs::metadata(&path).map(|m| m.len()).unwrap_or(0)
        };
        Ok(Self {
            path,
            offset,
            pending: Vec::new(),
        })
    }

    pub fn poll(&mut self) -> std::io::Result<Vec<String>> {
        let mut file = match File::open(&self.path) {
            Ok(f) => f,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
            Err(e) => return Err(e),
        };
        let len = file.metadata()?.len();
        if len < self.offset {
            self.offset = 0;
            self.pending.clear();
        }
        file.seek(SeekFrom::Start(self.offset))?;
        let mut buf = Vec::new();
        file.read_to_end(&mut buf)?;
        self.offset += buf.len() as u64;
        self.pending.extend_from_slice(&buf);
        let Some(last) = self.pending.iter().rposition(|&b| b == b'\n') else {
            return Ok(Vec::new());
        };
        let rest = self.pending.split_off(last + 1);
        let complete = std::mem::replace(&mut self.pending, rest);
        Ok(String::from_utf8_lossy(&complete)
            .lines()
            .filter(|l| !l.trim().is_empty())
            .map(str::to_string)
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    #[test]
    fn partial_lines_wait_for_their_newline() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("events.jsonl");
        let mut f = File::create(&path).unwrap();
        writeln!(f, "old").unwrap();
        let mut tail = LineTail::new(&path, false).unwrap();
        assert!(tail.poll().unwrap().is_empty());
        write!(f, "one\ntw").unwrap();
        assert_eq!(tail.poll().unwrap(), ["one"]);
        write!(f, "o\n\n").unwrap();
        assert_eq!(tail.poll().unwrap(), ["two"]);
        let mut from_start = LineTail::new(&path, true).unwrap();
        assert_eq!(from_start.poll().unwrap(), ["old", "one", "two"]);
    }
}
