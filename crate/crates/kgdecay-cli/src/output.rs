//! Output directory layout and writers. JSON floats carry 17 significant
//! digits; non-finite values become `null`.

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::ser::{Formatter, Serializer};

struct SeventeenDigits;

impl Formatter for SeventeenDigits {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        write!(w, "{value:.16e}")
    }

    fn write_f32<W: ?Sized + Write>(&mut self, w: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(w, value as f64)
    }
}

pub fn to_json<T: Serialize>(value: &T) -> io::Result<Vec<u8>> {
    let mut buf = Vec::new();
    let mut ser = Serializer::with_formatter(&mut buf, SeventeenDigits);
    value.serialize(&mut ser).map_err(io::Error::other)?;
    buf.push(b'\n');
    Ok(buf)
}

#[derive(Clone, Debug, Serialize)]
pub struct FileEntry {
    pub path: String,
    pub kind: &'static str,
}

/// Writes under `root` and remembers every file for the manifest.
pub struct OutDir {
    root: PathBuf,
    pub files: Vec<FileEntry>,
}

impl OutDir {
    pub fn create(root: &Path) -> io::Result<Self> {
        fs::create_dir_all(root)?;
        Ok(Self { root: root.to_path_buf(), files: Vec::new() })
    }

    pub fn write_with(
        &mut self,
        rel: &str,
        kind: &'static str,
        f: impl FnOnce(&mut BufWriter<File>) -> kgdecay::Result<()>,
    ) -> kgdecay::Result<()> {
        let path = self.root.join(rel);
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir)?;
        }
        let mut w = BufWriter::new(File::create(&path)?);
        f(&mut w)?;
        w.flush()?;
        self.files.push(FileEntry { path: rel.into(), kind });
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, rel: &str, kind: &'static str, value: &T) -> kgdecay::Result<()> {
        let bytes = to_json(value)?;
        self.write_with(rel, kind, |w| Ok(w.write_all(&bytes)?))
    }
}

/// Directory-safe label of a mass, e.g. `m0.03`.
pub fn mass_label(m: f64) -> String {
    format!("m{m}")
}
