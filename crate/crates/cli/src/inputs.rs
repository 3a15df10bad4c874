use std::io;
use std::path::{Path, PathBuf};

/// Expands inputs into a sorted list of files per argument. Directories
/// are walked recursively, arguments with glob metacharacters are matched,
/// and anything else is passed through even if it does not exist so the
/// failure is reported per item.
pub fn expand(inputs: &[String]) -> io::Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for arg in inputs {
        let path = Path::new(arg);
        if path.is_dir() {
            out.extend(walk(path)?);
        } else if arg.contains(['*', '?', '[']) {
            let pattern = glob::glob(arg).map_err(|e| io::Error::new(io::ErrorKind::InvalidInput, e))?;
            let mut matched: Vec<PathBuf> = pattern.filter_map(Result::ok).filter(|p| p.is_file()).collect();
            matched.sort();
            out.extend(matched);
        } else {
            out.push(path.to_path_buf());
        }
    }
    Ok(out)
}

/// Every regular file below `dir`, sorted by path. Hidden entries are skipped.
pub fn walk(dir: &Path) -> io::Result<Vec<PathBuf>> {
    let hidden = |e: &walkdir::DirEntry| e.depth() > 0 && e.file_name().to_str().is_some_and(|n| n.starts_with('.'));
    let mut files = Vec::new();
    for entry in walkdir::WalkDir::new(dir).into_iter().filter_entry(|e| !hidden(e)) {
        let entry = entry.map_err(io::Error::from)?;
        if !entry.file_type().is_dir() {
            files.push(entry.into_path());
        }
    }
    files.sort();
    Ok(files)
}
