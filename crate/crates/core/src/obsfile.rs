//! Text export/import of edge-party observable sets, so third-party sets can
//! be audited against the certificates.
//!
//! Format, line oriented:
//! ```text
//! scheme bilocal-I
//! n 3
//! party A settings 4 dim 2
//! setting 1
//! <dim rows of dim complex literals like +5.77e-1-5.77e-1i>
//! ...
//! ```

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::quantum::CMatrix;
use crate::scenario::{Party, ScenarioSpec};
use crate::schemes::PartyObservables;

fn format_complex(z: Complex64) -> String {
    format!("{:+e}{:+e}i", z.re, z.im)
}

fn parse_complex(token: &str) -> Result<Complex64> {
    let inner = token
        .strip_suffix('i')
        .ok_or_else(|| Error::ObservableFile(format!("complex literal `{token}` lacks trailing i")))?;
    // split at the sign that starts the imaginary part (not an exponent sign)
    let bytes = inner.as_bytes();
    let mut split = None;
    for idx in (1..bytes.len()).rev() {
        let c = bytes[idx] as char;
        if (c == '+' || c == '-') && bytes[idx - 1] as char != 'e' && bytes[idx - 1] as char != 'E'
        {
            split = Some(idx);
            break;
        }
    }
    let split = split
        .ok_or_else(|| Error::ObservableFile(format!("cannot split complex literal `{token}`")))?;
    let re: f64 = inner[..split]
        .parse()
        .map_err(|_| Error::ObservableFile(format!("bad real part in `{token}`")))?;
    let im: f64 = inner[split..]
        .parse()
        .map_err(|_| Error::ObservableFile(format!("bad imaginary part in `{token}`")))?;
    Ok(Complex64::new(re, im))
}

/// Serialize the edge observables of a scenario.
pub fn export_observables(spec: &ScenarioSpec, edges: &[PartyObservables]) -> String {
    let mut out = String::new();
    out.push_str(&format!("scheme {}\n", spec.kind().name()));
    out.push_str(&format!("n {}\n", spec.n()));
    for obs in edges {
        let dim = obs.dim();
        out.push_str(&format!(
            "party {} settings {} dim {}\n",
            obs.party.label(),
            obs.count(),
            dim
        ));
        for (k, o) in obs.observables.iter().enumerate() {
            out.push_str(&format!("setting {}\n", k + 1));
            for i in 0..dim {
                let row: Vec<String> = (0..dim).map(|j| format_complex(o.get(i, j))).collect();
                out.push_str(&row.join(" "));
                out.push('\n');
            }
        }
    }
    out
}

fn party_from_label(label: &str) -> Result<Party> {
    match label {
        "A" => Ok(Party::Alice),
        "B" => Ok(Party::Bob),
        "C" => Ok(Party::Charlie),
        "D" => Ok(Party::Diana),
        other => Err(Error::ObservableFile(format!("unknown party label `{other}`"))),
    }
}

/// Parse an observable document; the scheme/n header must match `spec`.
pub fn import_observables(spec: &ScenarioSpec, text: &str) -> Result<Vec<PartyObservables>> {
    let mut lines = text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'));

    let header = |line: Option<&str>, key: &str| -> Result<String> {
        let line = line.ok_or_else(|| Error::ObservableFile(format!("missing `{key}` line")))?;
        line.strip_prefix(key)
            .map(|rest| rest.trim().to_string())
            .ok_or_else(|| Error::ObservableFile(format!("expected `{key} ...`, got `{line}`")))
    };
    let scheme = header(lines.next(), "scheme")?;
    if scheme != spec.kind().name() {
        return Err(Error::ObservableFile(format!(
            "file is for scheme `{scheme}`, expected `{}`",
            spec.kind().name()
        )));
    }
    let n: usize = header(lines.next(), "n")?
        .parse()
        .map_err(|_| Error::ObservableFile("bad n header".into()))?;
    if n != spec.n() {
        return Err(Error::ObservableFile(format!(
            "file is for n={n}, expected n={}",
            spec.n()
        )));
    }

    let mut result: Vec<PartyObservables> = Vec::new();
    let mut pending: Option<(Party, usize, usize, Vec<CMatrix>)> = None;
    let mut current: Vec<Vec<Complex64>> = Vec::new();

    let finish_matrix =
        |pending: &mut Option<(Party, usize, usize, Vec<CMatrix>)>,
         current: &mut Vec<Vec<Complex64>>|
         -> Result<()> {
            if current.is_empty() {
                return Ok(());
            }
            let (_, _, dim, matrices) = pending
                .as_mut()
                .ok_or_else(|| Error::ObservableFile("matrix rows outside a party".into()))?;
            if current.len() != *dim {
                return Err(Error::ObservableFile(format!(
                    "matrix has {} rows, expected {dim}",
                    current.len()
                )));
            }
            matrices.push(CMatrix::from_rows(current));
            current.clear();
            Ok(())
        };
    let finish_party = |pending: &mut Option<(Party, usize, usize, Vec<CMatrix>)>,
                        result: &mut Vec<PartyObservables>|
     -> Result<()> {
        if let Some((party, settings, _, matrices)) = pending.take() {
            if matrices.len() != settings {
                return Err(Error::ObservableFile(format!(
                    "party {party} declares {settings} settings but provides {}",
                    matrices.len()
                )));
            }
            result.push(PartyObservables::new(party, matrices).map_err(|e| {
                Error::ObservableFile(format!("party {party}: {e}"))
            })?);
        }
        Ok(())
    };

    for line in lines {
        if let Some(rest) = line.strip_prefix("party ") {
            finish_matrix(&mut pending, &mut current)?;
            finish_party(&mut pending, &mut result)?;
            let tokens: Vec<&str> = rest.split_whitespace().collect();
            if tokens.len() != 5 || tokens[1] != "settings" || tokens[3] != "dim" {
                return Err(Error::ObservableFile(format!("bad party header `{line}`")));
            }
            let party = party_from_label(tokens[0])?;
            let settings: usize = tokens[2]
                .parse()
                .map_err(|_| Error::ObservableFile("bad settings count".into()))?;
            let dim: usize = tokens[4]
                .parse()
                .map_err(|_| Error::ObservableFile("bad dim".into()))?;
            pending = Some((party, settings, dim, Vec::new()));
        } else if line.starts_with("setting ") {
            finish_matrix(&mut pending, &mut current)?;
        } else {
            let row: Vec<Complex64> = line
                .split_whitespace()
                .map(parse_complex)
                .collect::<Result<_>>()?;
            let dim = pending
                .as_ref()
                .map(|(_, _, d, _)| *d)
                .ok_or_else(|| Error::ObservableFile("matrix rows before any party".into()))?;
            if row.len() != dim {
                return Err(Error::ObservableFile(format!(
                    "row has {} entries, expected {dim}",
                    row.len()
                )));
            }
            current.push(row);
        }
    }
    finish_matrix(&mut pending, &mut current)?;
    finish_party(&mut pending, &mut result)?;

    let expected = spec.edge_parties();
    let provided: Vec<Party> = result.iter().map(|o| o.party).collect();
    if expected != provided {
        return Err(Error::ObservableFile(format!(
            "file provides parties {provided:?}, scenario needs {expected:?}"
        )));
    }
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::ScenarioKind;
    use crate::schemes::optimal_observables;

    #[test]
    fn complex_literals_roundtrip() {
        for z in [
            Complex64::new(0.0, 0.0),
            Complex64::new(1.0, -1.0),
            Complex64::new(-0.5773502691896258, 3.2e-17),
            Complex64::new(6.02e23, -1.6e-19),
        ] {
            let text = format_complex(z);
            let back = parse_complex(&text).unwrap();
            assert_eq!(z, back, "{text}");
        }
    }

    #[test]
    fn export_import_roundtrip() {
        for (kind, n) in [
            (ScenarioKind::StandardBilocal, 2),
            (ScenarioKind::BilocalI, 3),
            (ScenarioKind::TrilocalI, 3),
        ] {
            let spec = ScenarioSpec::new(kind, n).unwrap();
            let obs = optimal_observables(&spec).unwrap();
            let text = export_observables(&spec, &obs.edges);
            let back = import_observables(&spec, &text).unwrap();
            assert_eq!(back.len(), obs.edges.len());
            for (orig, parsed) in obs.edges.iter().zip(&back) {
                assert_eq!(orig.party, parsed.party);
                for (a, b) in orig.observables.iter().zip(&parsed.observables) {
                    assert!(a.max_abs_diff(b) < 1e-15);
                }
            }
        }
    }

    #[test]
    fn import_rejects_wrong_scenario() {
        let b1 = ScenarioSpec::new(ScenarioKind::BilocalI, 3).unwrap();
        let b2 = ScenarioSpec::new(ScenarioKind::BilocalII, 3).unwrap();
        let text = export_observables(&b1, &optimal_observables(&b1).unwrap().edges);
        assert!(matches!(
            import_observables(&b2, &text),
            Err(Error::ObservableFile(_))
        ));
    }

    #[test]
    fn import_rejects_non_involutions() {
        let spec = ScenarioSpec::new(ScenarioKind::StandardBilocal, 2).unwrap();
        let text = "scheme standard-bilocal\nn 2\nparty A settings 2 dim 2\n\
                    setting 1\n+1e0+0e0i +0e0+0e0i\n+0e0+0e0i +1e0+0e0i\n\
                    setting 2\n+2e0+0e0i +0e0+0e0i\n+0e0+0e0i +2e0+0e0i\n\
                    party C settings 2 dim 2\n\
                    setting 1\n+1e0+0e0i +0e0+0e0i\n+0e0+0e0i -1e0+0e0i\n\
                    setting 2\n+0e0+0e0i +1e0+0e0i\n+1e0+0e0i +0e0+0e0i\n";
        assert!(matches!(
            import_observables(&spec, text),
            Err(Error::ObservableFile(_))
        ));
    }
}
