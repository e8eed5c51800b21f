//! One JSON document per case, replaced atomically on every change.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use super::Case;

pub fn case_path(dir: &Path, case_id: &str) -> PathBuf {
    dir.join(format!("{case_id}.json"))
}

/// Write `case` to `<dir>/<case_id>.json` via a temporary file and rename.
pub fn write_case(dir: &Path, case: &Case) -> io::Result<()> {
    fs::create_dir_all(dir)?;
    let tmp = dir.join(format!(".{}.json.tmp", case.case_id));
    {
        let mut f = fs::File::create(&tmp)?;
        serde_json::to_writer_pretty(&mut f, case)?;
        f.write_all(b"\n")?;
        f.sync_all()?;
    }
    fs::rename(&tmp, case_path(dir, &case.case_id))
}

pub fn read_case(dir: &Path, case_id: &str) -> io::Result<Case> {
    let bytes = fs::read(case_path(dir, case_id))?;
    Ok(serde_json::from_slice(&bytes)?)
}

/// All cases in `dir`, ordered by case id. Temporary files are ignored.
pub fn load_all(dir: &Path) -> io::Result<Vec<Case>> {
    let mut out = Vec::new();
    if !dir.exists() {
        return Ok(out);
    }
    for entry in fs::read_dir(dir)? {
        let path = entry?.path();
        let name = path.file_name().and_then(|n| n.to_str()).unwrap_or_default();
        if name.starts_with('.') || !name.ends_with(".json") {
            continue;
        }
        out.push(serde_json::from_slice(&fs::read(&path)?)?);
    }
    out.sort_by(|a: &Case, b: &Case| a.case_id.cmp(&b.case_id));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::casework::CaseBook;

    #[test]
    fn round_trip_and_overwrite() {
        let dir = tempfile::tempdir().unwrap();
        let mut book = CaseBook::new();
        let f = book.prepare_report("v", b"x", None, 3);
        let mut case = book.apply(&f).unwrap().clone();
        write_case(dir.path(), &case).unwrap();
        case.counseling_active = true;
        write_case(dir.path(), &case).unwrap();
        assert_eq!(read_case(dir.path(), &case.case_id).unwrap(), case);
        assert_eq!(load_all(dir.path()).unwrap(), vec![case]);
    }
}
