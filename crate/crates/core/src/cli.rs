//! Argument parsing and artifact output for the `sw-family-calc` binary.

use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value as Json};

use crate::families::{parse_diffeo, Chamber, Engine, PsiTable};
use crate::kahler::{basic_classes_csv, basic_classes_zero, KahlerChamber, KahlerModel};
use crate::lattice::LatticeVector;
use crate::manifold::{expected_dimension, parse_manifold, spinc_family, Atom, ManifoldExpr};
use crate::torelli::{build_td, rank_certificate, sw_oq, CertError};

pub const SCHEMA: &str = "sw-family-calc/1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ChamberArg {
    Zero,
    Constant,
}

impl From<ChamberArg> for Chamber {
    fn from(c: ChamberArg) -> Chamber {
        match c {
            ChamberArg::Zero => Chamber::Zero,
            ChamberArg::Constant => Chamber::Constant,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Parser)]
#[command(name = "sw-family-calc", version, about = "Exact families Seiberg-Witten calculator")]
pub struct Query {
    #[command(subcommand)]
    pub command: Command,
    /// Write the artifact to FILE instead of standard output.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Recorded in the output header.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Coordinate bound for enumerations.
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub bound: Option<i64>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

#[derive(Debug, Clone, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Betti numbers, signature, parity and PSC flag of a connected sum.
    Invariants {
        #[arg(long)]
        manifold: String,
    },
    /// Characteristic classes with d(s) = -1 inside the coordinate box.
    EnumerateSpinc {
        #[arg(long)]
        manifold: String,
    },
    /// Chambered invariants of E1 or E1(m,n) at one line bundle, or its basic classes.
    SwKahler {
        #[arg(long)]
        surface: String,
        /// An integer a for L = a t', or comma-separated coordinates.
        #[arg(long = "L", allow_hyphen_values = true)]
        l: Option<String>,
        #[arg(long)]
        basic_classes: bool,
    },
    /// Families invariant of a symbolic diffeomorphism.
    SwFamily {
        #[arg(long)]
        manifold: String,
        /// Comma-separated coordinates of c(s).
        #[arg(long, allow_hyphen_values = true)]
        spinc: String,
        #[arg(long)]
        diffeo: String,
        #[arg(long, value_enum, default_value_t = ChamberArg::Zero)]
        chamber: ChamberArg,
        /// JSON file of named automorphisms for conj(NAME, f).
        #[arg(long)]
        psi: Option<PathBuf>,
    },
    /// Support matrix of t_1, t_3, ..., t_{2D-1} and its rank certificate.
    TorelliRank {
        #[arg(long = "D")]
        size: usize,
    },
    /// Builds t_d and s_d and reports their invariants.
    BuildTd {
        #[arg(long)]
        d: i64,
        #[arg(long)]
        dump: bool,
    },
    /// Sum of the families invariant over the divisibility class O_q.
    SwOq {
        #[arg(long, default_value = "E1 # S2xS2")]
        manifold: String,
        #[arg(long)]
        diffeo: String,
        #[arg(long)]
        q: i64,
        #[arg(long)]
        psi: Option<PathBuf>,
    },
}

impl Query {
    /// Arguments that parse back to this query.
    pub fn to_args(&self) -> Vec<String> {
        let mut a = vec!["sw-family-calc".to_string()];
        match &self.command {
            Command::Invariants { manifold } => {
                a.push("invariants".into());
                kv(&mut a, "--manifold", manifold.clone());
            }
            Command::EnumerateSpinc { manifold } => {
                a.push("enumerate-spinc".into());
                kv(&mut a, "--manifold", manifold.clone());
            }
            Command::SwKahler { surface, l, basic_classes } => {
                a.push("sw-kahler".into());
                kv(&mut a, "--surface", surface.clone());
                if let Some(l) = l {
                    kv(&mut a, "--L", l.clone());
                }
                if *basic_classes {
                    a.push("--basic-classes".into());
                }
            }
            Command::SwFamily { manifold, spinc, diffeo, chamber, psi } => {
                a.push("sw-family".into());
                kv(&mut a, "--manifold", manifold.clone());
                kv(&mut a, "--spinc", spinc.clone());
                kv(&mut a, "--diffeo", diffeo.clone());
                kv(&mut a, "--chamber", chamber.to_possible_value().expect("not skipped").get_name().to_string());
                if let Some(p) = psi {
                    kv(&mut a, "--psi", p.display().to_string());
                }
            }
            Command::TorelliRank { size } => {
                a.push("torelli-rank".into());
                kv(&mut a, "--D", size.to_string());
            }
            Command::BuildTd { d, dump } => {
                a.push("build-td".into());
                kv(&mut a, "--d", d.to_string());
                if *dump {
                    a.push("--dump".into());
                }
            }
            Command::SwOq { manifold, diffeo, q, psi } => {
                a.push("sw-oq".into());
                kv(&mut a, "--manifold", manifold.clone());
                kv(&mut a, "--diffeo", diffeo.clone());
                kv(&mut a, "--q", q.to_string());
                if let Some(p) = psi {
                    kv(&mut a, "--psi", p.display().to_string());
                }
            }
        }
        if let Some(o) = &self.out {
            kv(&mut a, "--out", o.display().to_string());
        }
        if let Some(s) = self.seed {
            kv(&mut a, "--seed", s.to_string());
        }
        if let Some(b) = self.bound {
            kv(&mut a, "--bound", b.to_string());
        }
        kv(&mut a, "--format", self.format.to_possible_value().expect("not skipped").get_name().to_string());
        a
    }
}

fn kv(a: &mut Vec<String>, key: &str, value: String) {
    a.push(key.to_string());
    a.push(value);
}

/// Result of one invocation: exit code and the text for standard output and error.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Compute { kind: &'static str, message: String },
}

impl<E: Into<CertError>> From<E> for Failure {
    fn from(e: E) -> Self {
        let e: CertError = e.into();
        let kind = match &e {
            CertError::Engine(_) => "engine",
            CertError::Manifold(_) => "manifold",
            CertError::DiagonalNotOdd { .. } | CertError::Uncertified { .. } => "uncertified",
            _ => "certificate",
        };
        Failure::Compute { kind, message: e.to_string() }
    }
}

fn compute(kind: &'static str, e: impl std::fmt::Display) -> Failure {
    Failure::Compute { kind, message: e.to_string() }
}

enum Artifact {
    Json(Json),
    Text(String),
}

/// Parses `args` (program name first) and runs the query.
pub fn main_with_args<I, T>(args: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    match Query::try_parse_from(args) {
        Ok(q) => run(&q),
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            if code == 0 {
                Outcome { code, stdout: text, stderr: String::new() }
            } else {
                Outcome { code, stdout: String::new(), stderr: text }
            }
        }
    }
}

pub fn run(q: &Query) -> Outcome {
    let result = dispatch(q).and_then(|artifact| {
        let text = match artifact {
            Artifact::Json(mut j) => {
                if let (Some(s), Some(obj)) = (q.seed, j.as_object_mut()) {
                    obj.insert("seed".into(), json!(s));
                }
                serde_json::to_string_pretty(&j).expect("serializable") + "\n"
            }
            Artifact::Text(t) => t,
        };
        match &q.out {
            Some(path) => {
                std::fs::write(path, &text).map_err(|e| compute("io", e))?;
                Ok(String::new())
            }
            None => Ok(text),
        }
    });
    match result {
        Ok(stdout) => Outcome { code: 0, stdout, stderr: String::new() },
        Err(Failure::Usage(message)) => Outcome { code: 2, stdout: String::new(), stderr: format!("error: {message}\n") },
        Err(Failure::Compute { kind, message }) => {
            let j = json!({ "schema": SCHEMA, "error": { "kind": kind, "message": message } });
            Outcome { code: 1, stdout: serde_json::to_string_pretty(&j).expect("serializable") + "\n", stderr: String::new() }
        }
    }
}

fn header(command: &str) -> serde_json::Map<String, Json> {
    let mut m = serde_json::Map::new();
    m.insert("schema".into(), json!(SCHEMA));
    m.insert("command".into(), json!(command));
    m
}

fn manifold(text: &str) -> Result<ManifoldExpr, Failure> {
    parse_manifold(text).map_err(|e| compute("parse", e))
}

fn coords(text: &str) -> Result<Vec<i64>, Failure> {
    let t = text.trim().trim_start_matches('(').trim_end_matches(')');
    t.split(',')
        .map(|x| x.trim().parse::<i64>().map_err(|_| Failure::Usage(format!("bad coordinate '{}' in '{text}'", x.trim()))))
        .collect()
}

fn psi_table(path: &Option<PathBuf>) -> Result<PsiTable, Failure> {
    match path {
        None => Ok(PsiTable::default()),
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| compute("io", format!("{}: {e}", p.display())))?;
            PsiTable::from_json(&text).map_err(|e| compute("parse", e))
        }
    }
}

fn json_only(q: &Query, what: &str) -> Result<(), Failure> {
    if q.format == Format::Csv {
        return Err(Failure::Usage(format!("{what} has no CSV form")));
    }
    Ok(())
}

fn dispatch(q: &Query) -> Result<Artifact, Failure> {
    match &q.command {
        Command::Invariants { manifold: text } => {
            json_only(q, "invariants")?;
            let x = manifold(text)?;
            let mut h = header("invariants");
            h.insert("manifold".into(), json!(x.to_string()));
            h.insert("invariants".into(), serde_json::to_value(x.invariants()).expect("serializable"));
            h.insert("labels".into(), json!(x.lattice().labels()));
            Ok(Artifact::Json(h.into()))
        }
        Command::EnumerateSpinc { manifold: text } => {
            let x = manifold(text)?;
            let bound = q.bound.unwrap_or(3);
            let classes = spinc_family(&x, bound)?;
            if q.format == Format::Csv {
                let mut s = String::from("coords,square,divisibility\n");
                for c in &classes {
                    let cs: Vec<String> = c.coords().iter().map(i64::to_string).collect();
                    s.push_str(&format!("\"{}\",{},{}\n", cs.join(","), c.square(), c.divisibility()));
                }
                return Ok(Artifact::Text(s));
            }
            let list: Vec<Json> = classes
                .iter()
                .map(|c| json!({ "c": c.coords(), "square": c.square(), "divisibility": c.divisibility(), "d": expected_dimension(&x, c) }))
                .collect();
            let mut h = header("enumerate-spinc");
            h.insert("manifold".into(), json!(x.to_string()));
            h.insert("bound".into(), json!(bound));
            h.insert("count".into(), json!(list.len()));
            h.insert("classes".into(), json!(list));
            Ok(Artifact::Json(h.into()))
        }
        Command::SwKahler { surface, l, basic_classes } => sw_kahler(q, surface, l.as_deref(), *basic_classes),
        Command::SwFamily { manifold: text, spinc, diffeo, chamber, psi } => {
            json_only(q, "sw-family")?;
            let x = manifold(text)?;
            let s = x.spinc(coords(spinc)?)?;
            let f = parse_diffeo(diffeo, &x, &psi_table(psi)?).map_err(|e| compute("parse", e))?;
            let v = Engine::default().sw_family(&x, &s, &f, (*chamber).into()).map_err(|e| compute("engine", e))?;
            let mut h = header("sw-family");
            h.insert("manifold".into(), json!(x.to_string()));
            h.insert("spinc".into(), json!(s.coords()));
            h.insert("diffeo".into(), json!(f.to_string()));
            h.insert("chamber".into(), serde_json::to_value(Chamber::from(*chamber)).expect("serializable"));
            h.insert("value".into(), v.value.to_json());
            h.insert("kind".into(), json!(v.value.kind()));
            h.insert("trace".into(), json!(v.trace()));
            h.insert("derivation".into(), serde_json::to_value(&v.derivation).expect("serializable"));
            Ok(Artifact::Json(h.into()))
        }
        Command::TorelliRank { size } => {
            let cert = rank_certificate(*size, &Engine::default())?;
            if q.format == Format::Csv {
                return Ok(Artifact::Text(cert.witness.to_csv()));
            }
            let mut j = cert.witness.to_json();
            j["command"] = json!("torelli-rank");
            j["rank_lower_bound"] = json!(cert.rank_lower_bound);
            Ok(Artifact::Json(j))
        }
        Command::BuildTd { d, dump } => {
            json_only(q, "build-td")?;
            let t = build_td(*d)?;
            let diag = t.diagonal_value(&Engine::default())?;
            let mut h = header("build-td");
            h.insert("d".into(), json!(t.d));
            h.insert("manifold".into(), json!(t.x.to_string()));
            h.insert("conjugate_chart".into(), json!(t.x_d.to_string()));
            h.insert("td".into(), json!(t.td.to_string()));
            h.insert("s_d".into(), json!(t.sd.coords()));
            h.insert("square".into(), json!(t.sd.square()));
            h.insert("divisibility".into(), json!(t.sd.divisibility()));
            h.insert("expected_dimension".into(), json!(expected_dimension(&t.x, &t.sd)));
            h.insert("torelli".into(), json!(t.td.is_torelli()));
            h.insert("sgn_plus".into(), json!({ "f0": t.f0.sgn_plus(), "fd": t.fd.sgn_plus(), "td": t.td.sgn_plus() }));
            h.insert("value".into(), diag.value.to_json());
            h.insert("kind".into(), json!(diag.value.kind()));
            if *dump {
                h.insert("induced".into(), json!({ "f0": t.f0.induced().matrix(), "fd": t.fd.induced().matrix(), "psi": t.psi.matrix() }));
                h.insert("trace".into(), json!(diag.trace()));
                h.insert("derivation".into(), serde_json::to_value(&diag.derivation).expect("serializable"));
            }
            Ok(Artifact::Json(h.into()))
        }
        Command::SwOq { manifold: text, diffeo, q: qq, psi } => {
            json_only(q, "sw-oq")?;
            let x = manifold(text)?;
            let f = parse_diffeo(diffeo, &x, &psi_table(psi)?).map_err(|e| compute("parse", e))?;
            let bound = q.bound.unwrap_or(3 * qq.abs());
            let r = sw_oq(&Engine::default(), &x, &f, *qq, bound)?;
            let nonzero: Vec<Json> = r
                .terms
                .iter()
                .filter(|t| !matches!(t.value.value.reduce(), crate::families::Value::Mod2(0)))
                .map(|t| json!({ "c": t.s.coords(), "value": t.value.value.to_json(), "trace": t.value.trace() }))
                .collect();
            let mut h = header("sw-oq");
            h.insert("manifold".into(), json!(x.to_string()));
            h.insert("diffeo".into(), json!(f.to_string()));
            h.insert("q".into(), json!(r.q));
            h.insert("bound".into(), json!(r.bound));
            h.insert("value".into(), r.value.to_json());
            h.insert("kind".into(), json!(r.value.kind()));
            h.insert("certified_partial_sum".into(), r.certified_partial_sum.to_json());
            h.insert("terms".into(), json!(r.terms.len()));
            h.insert("unknown_terms".into(), json!(r.unknown_terms));
            h.insert("support_radius".into(), json!(r.support_radius));
            h.insert("support_captured".into(), json!(r.support_captured));
            h.insert("nonzero_terms".into(), json!(nonzero));
            Ok(Artifact::Json(h.into()))
        }
    }
}

fn sw_kahler(q: &Query, surface: &str, l: Option<&str>, basic: bool) -> Result<Artifact, Failure> {
    let x = manifold(surface)?;
    let atom = match x.summands() {
        [a @ (Atom::E1 | Atom::E1Log { .. })] => *a,
        _ => return Err(compute("kahler", format!("'{surface}' is not E1 or E1(m,n)"))),
    };
    let model = KahlerModel::for_atom(atom).map_err(|e| compute("kahler", e))?;
    if basic {
        let bound = q.bound.unwrap_or(0);
        if q.format == Format::Csv {
            return Ok(Artifact::Text(basic_classes_csv(&model, bound).map_err(|e| compute("kahler", e))?));
        }
        let classes = basic_classes_zero(&model, bound).map_err(|e| compute("kahler", e))?;
        let list: Vec<Json> = classes
            .iter()
            .map(|(l, v)| json!({ "a": model.line_coefficient(l), "L": l.coords(), "sw_zero": v }))
            .collect();
        let mut h = header("sw-kahler");
        h.insert("surface".into(), json!(atom.name()));
        h.insert("basic_classes".into(), json!(list));
        return Ok(Artifact::Json(h.into()));
    }
    json_only(q, "sw-kahler without --basic-classes")?;
    let text = l.ok_or_else(|| Failure::Usage("sw-kahler needs --L or --basic-classes".into()))?;
    let line = match text.trim().parse::<i64>() {
        Ok(a) => model.line(a),
        Err(_) => LatticeVector::new(model.lattice(), coords(text)?).map_err(|e| compute("lattice", e))?,
    };
    let err = |e| compute("kahler", e);
    let mut h = header("sw-kahler");
    h.insert("surface".into(), json!(atom.name()));
    h.insert("L".into(), json!(line.coords()));
    h.insert("c".into(), json!(model.characteristic(&line).map_err(err)?.coords()));
    h.insert("plus".into(), json!(model.sw_chambered(&line, KahlerChamber::Plus).map_err(err)?));
    h.insert("minus".into(), json!(model.sw_chambered(&line, KahlerChamber::Minus).map_err(err)?));
    let zero = match model.sw_zero_chamber(&line) {
        Ok(v) => json!(v),
        Err(crate::kahler::KahlerError::ChamberUndefined(_)) => Json::Null,
        Err(e) => return Err(err(e)),
    };
    h.insert("zero".into(), zero);
    h.insert("wall_side".into(), serde_json::to_value(model.wall_side(&line).map_err(err)?).expect("serializable"));
    h.insert("d".into(), json!(model.expected_dimension(&line).map_err(err)?));
    Ok(Artifact::Json(h.into()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn query_round_trip() {
        let queries = [
            "sw-family-calc torelli-rank --D 3",
            "sw-family-calc --seed 7 --bound -2 sw-oq --diffeo td(3) --q 3",
            "sw-family-calc sw-kahler --surface E1(2,3) --L -1 --basic-classes --format csv",
            "sw-family-calc sw-family --manifold E1#S2xS2 --spinc=-3,1,1,1,1,1,1,1,1,1,0,0 --diffeo td(1) --chamber constant",
            "sw-family-calc build-td --d 7 --dump --out x.json",
            "sw-family-calc invariants --manifold 2CP2",
        ];
        for text in queries {
            let q = Query::try_parse_from(text.split(' ')).unwrap();
            assert_eq!(Query::try_parse_from(q.to_args()).unwrap(), q, "{text}");
        }
    }

    #[test]
    fn kahler_example() {
        let out = main_with_args(["sw-family-calc", "sw-kahler", "--surface", "E1(2,3)", "--L", "0"]);
        assert_eq!(out.code, 0);
        let j: Json = serde_json::from_str(&out.stdout).unwrap();
        assert_eq!((j["zero"].clone(), j["plus"].clone(), j["minus"].clone()), (json!(1), json!(1), json!(0)));
        assert_eq!(j["schema"], SCHEMA);
    }

    #[test]
    fn exit_codes() {
        assert_eq!(main_with_args(["sw-family-calc", "torelli-rank", "--D", "3", "--bogus"]).code, 2);
        let bad = main_with_args(["sw-family-calc", "invariants", "--manifold", "E1(2,4)"]);
        assert_eq!(bad.code, 1);
        let j: Json = serde_json::from_str(&bad.stdout).unwrap();
        assert_eq!(j["error"]["kind"], "parse");
        assert_eq!(main_with_args(["sw-family-calc", "build-td", "--d", "4"]).code, 1);
    }

    #[test]
    fn torelli_rank_output() {
        let out = main_with_args(["sw-family-calc", "torelli-rank", "--D", "3"]);
        let j: Json = serde_json::from_str(&out.stdout).unwrap();
        assert_eq!(j["rank"], 3);
        assert_eq!(j["triangular"], true);
    }

    #[test]
    fn seed_is_logged() {
        let out = main_with_args(["sw-family-calc", "--seed", "11", "invariants", "--manifold", "K3"]);
        let j: Json = serde_json::from_str(&out.stdout).unwrap();
        assert_eq!(j["seed"], 11);
        assert_eq!(j["invariants"]["is_spin"], true);
    }
}
