//! Adapter around an external PESQ binary.
//!
//! PESQ is a licensed algorithm, so it is never computed in-process. When a
//! tool path is configured, the reference and degraded signals are written to
//! temporary WAV files and the tool is invoked as `tool ref.wav deg.wav`; the
//! last non-empty line of its standard output must be the score. A missing
//! tool yields [`PesqOutcome::Unavailable`] rather than an error so reports
//! can simply omit the column.

use std::path::Path;
use std::process::Command;
use std::sync::atomic::{AtomicU64, Ordering};

use crate::error::{Error, Result};
use crate::signal_io::{save_wav, Waveform};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PesqOutcome {
    Score(f64),
    /// No tool was configured or the configured tool does not exist.
    Unavailable,
}

static TEMP_COUNTER: AtomicU64 = AtomicU64::new(0);

fn temp_wav(tag: &str, w: &Waveform) -> Result<std::path::PathBuf> {
    let n = TEMP_COUNTER.fetch_add(1, Ordering::Relaxed);
    let path = std::env::temp_dir().join(format!(
        "epg2s-pesq-{}-{n}-{tag}.wav",
        std::process::id()
    ));
    save_wav(w, &path)?;
    Ok(path)
}

/// Runs the external tool on a signal pair. `tool` of `None` reports
/// [`PesqOutcome::Unavailable`] without touching the filesystem.
pub fn pesq(
    tool: Option<&Path>,
    reference: &Waveform,
    degraded: &Waveform,
) -> Result<PesqOutcome> {
    let Some(tool) = tool else {
        return Ok(PesqOutcome::Unavailable);
    };
    let ref_path = temp_wav("ref", reference)?;
    let deg_path = temp_wav("deg", degraded)?;
    let output = Command::new(tool).arg(&ref_path).arg(&deg_path).output();
    let _ = std::fs::remove_file(&ref_path);
    let _ = std::fs::remove_file(&deg_path);
    let output = match output {
        Ok(o) => o,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
            return Ok(PesqOutcome::Unavailable)
        }
        Err(e) => return Err(Error::io(tool, e)),
    };
    if !output.status.success() {
        return Err(Error::Adapter(format!(
            "{} exited with {}",
            tool.display(),
            output.status
        )));
    }
    let stdout = String::from_utf8_lossy(&output.stdout);
    let last = stdout
        .lines()
        .rev()
        .map(str::trim)
        .find(|l| !l.is_empty())
        .ok_or_else(|| Error::Adapter(format!("{} produced no output", tool.display())))?;
    last.parse::<f64>()
        .map(PesqOutcome::Score)
        .map_err(|_| {
            Error::Adapter(format!(
                "could not parse score from `{last}` ({})",
                tool.display()
            ))
        })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;
    use std::os::unix::fs::PermissionsExt;

    use crate::signal_io::AUDIO_RATE_HZ;

    fn tone() -> Waveform {
        Waveform::new(
            (0..4000)
                .map(|i| 0.3 * (std::f64::consts::TAU * 440.0 * i as f64 / 16000.0).sin())
                .collect(),
            AUDIO_RATE_HZ,
        )
    }

    fn script(body: &str) -> std::path::PathBuf {
        let path = std::env::temp_dir().join(format!(
            "epg2s-pesq-test-{}-{}.sh",
            std::process::id(),
            TEMP_COUNTER.fetch_add(1, Ordering::Relaxed)
        ));
        let mut f = std::fs::File::create(&path).unwrap();
        writeln!(f, "#!/bin/sh\n{body}").unwrap();
        let mut perms = f.metadata().unwrap().permissions();
        perms.set_mode(0o755);
        std::fs::set_permissions(&path, perms).unwrap();
        path
    }

    #[test]
    fn parses_the_last_nonempty_stdout_line() {
        let tool = script("echo 'PESQ v2 mock'\necho 'processing...'\necho '2.039'\necho ''");
        let r = pesq(Some(&tool), &tone(), &tone()).unwrap();
        std::fs::remove_file(&tool).unwrap();
        assert_eq!(r, PesqOutcome::Score(2.039));
    }

    #[test]
    fn missing_tool_reports_unavailable() {
        let r = pesq(Some(Path::new("/nonexistent/pesq-tool")), &tone(), &tone()).unwrap();
        assert_eq!(r, PesqOutcome::Unavailable);
        assert_eq!(pesq(None, &tone(), &tone()).unwrap(), PesqOutcome::Unavailable);
    }

    #[test]
    fn garbage_output_is_an_adapter_error() {
        let tool = script("echo 'no score here'");
        let r = pesq(Some(&tool), &tone(), &tone());
        std::fs::remove_file(&tool).unwrap();
        assert!(matches!(r, Err(Error::Adapter(_))));
    }

    #[test]
    fn nonzero_exit_is_an_adapter_error() {
        let tool = script("echo '2.5'\nexit 3");
        let r = pesq(Some(&tool), &tone(), &tone());
        std::fs::remove_file(&tool).unwrap();
        assert!(matches!(r, Err(Error::Adapter(_))));
    }
}
