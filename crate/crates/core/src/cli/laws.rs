use std::fmt::Write as _;

use serde::Serialize;

use super::{
    check_tol, emit_report, read_signal, resolve_measure, resolve_pairing, CmdResult, Failure,
    LawsArgs, Report, EXIT_CHECK_FAILED, EXIT_OK,
};
use crate::conv::ConvRequest;
use crate::error::Result;
use crate::function::{norm, SampledFunction};
use crate::group::InvariantMeasure;
use crate::pairing::Pairing;

const SCALE: f64 = 2.5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub(super) enum Status {
    Pass,
    Fail,
    Skipped,
    CounterexampleExhibited,
}

impl Status {
    fn label(self) -> &'static str {
        match self {
            Self::Pass => "pass",
            Self::Fail => "FAIL",
            Self::Skipped => "skipped",
            Self::CounterexampleExhibited => "counterexample exhibited",
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub(super) struct Row {
    check: &'static str,
    status: Status,
    /// Sup norm of the left side.
    lhs: f64,
    rhs: f64,
    deviation: f64,
    note: String,
}

struct Ctx<'a> {
    f: &'a SampledFunction,
    g: &'a SampledFunction,
    l: &'a Pairing,
    mu: &'a InvariantMeasure,
    variant: crate::conv::Variant,
    tol: f64,
}

impl Ctx<'_> {
    fn conv(&self, f: &SampledFunction, g: &SampledFunction) -> Result<SampledFunction> {
        ConvRequest::new(f, g, self.l, self.mu)?
            .with_variant(self.variant)
            .convolve()
    }

    fn compare(
        &self,
        check: &'static str,
        lhs: &SampledFunction,
        rhs: &SampledFunction,
    ) -> Result<Row> {
        let deviation = lhs.sup_distance(rhs)?;
        let (a, b) = (lhs.sup_norm(), rhs.sup_norm());
        let pass = deviation <= self.tol * (1.0 + a.max(b));
        Ok(Row {
            check,
            status: if pass { Status::Pass } else { Status::Fail },
            lhs: a,
            rhs: b,
            deviation,
            note: String::new(),
        })
    }
}

/// Splits a function into the parts on even and odd support positions.
fn split(f: &SampledFunction) -> Result<(SampledFunction, SampledFunction)> {
    let part = |parity: usize| {
        SampledFunction::new(
            *f.group(),
            f.vdim(),
            f.iter()
                .enumerate()
                .filter(|(i, _)| i % 2 == parity)
                .map(|(_, (p, v))| (*p, v.to_vec())),
        )
    };
    Ok((part(0)?, part(1)?))
}

fn run_checks(cx: &Ctx<'_>, verify: Option<&SampledFunction>) -> Result<Vec<Row>> {
    let (f, g) = (cx.f, cx.g);
    let fg = cx.conv(f, g)?;
    let mut rows = vec![
        cx.compare(
            "scalar (right)",
            &cx.conv(f, &g.scale(SCALE))?,
            &fg.scale(SCALE),
        )?,
        cx.compare(
            "scalar (left)",
            &cx.conv(&f.scale(SCALE), g)?,
            &fg.scale(SCALE),
        )?,
    ];
    let (g1, g2) = split(g)?;
    let sum = SampledFunction::lin_comb(1.0, &cx.conv(f, &g1)?, 1.0, &cx.conv(f, &g2)?)?;
    rows.push(cx.compare("additivity (right)", &sum, &fg)?);
    let (f1, f2) = split(f)?;
    let sum = SampledFunction::lin_comb(1.0, &cx.conv(&f1, g)?, 1.0, &cx.conv(&f2, g)?)?;
    rows.push(cx.compare("additivity (left)", &sum, &fg)?);

    let lt = cx.l.transpose();
    let swapped = ConvRequest::new(g, f, &lt, cx.mu)?
        .with_variant(cx.variant)
        .convolve()?;
    let mut comm = cx.compare("commutativity", &fg, &swapped)?;
    if !f.group().is_abelian() {
        comm.status = if comm.status == Status::Fail {
            Status::CounterexampleExhibited
        } else {
            Status::Skipped
        };
        comm.note = "nonabelian group; commutativity is not expected".into();
    }
    rows.push(comm);

    let req = ConvRequest::new(f, g, cx.l, cx.mu)?.with_variant(cx.variant);
    let id = req.integral_identity_check(cx.tol)?;
    rows.push(Row {
        check: "integral identity",
        status: if id.pass { Status::Pass } else { Status::Fail },
        lhs: norm(&id.lhs),
        rhs: norm(&id.rhs),
        deviation: id.deviation,
        note: String::new(),
    });
    let fb = req.fubini_swap_check()?;
    rows.push(Row {
        check: "fubini swap",
        status: if fb.pass { Status::Pass } else { Status::Fail },
        lhs: norm(&fb.x_outer),
        rhs: norm(&fb.t_outer),
        deviation: fb.deviation,
        note: String::new(),
    });
    if let Some(claimed) = verify {
        rows.push(cx.compare("verify", claimed, &fg)?);
    }
    Ok(rows)
}

pub(super) fn cmd_laws(a: LawsArgs) -> CmdResult {
    check_tol(a.tol)?;
    let f = read_signal(&a.f, a.selectors.group)?;
    let g = match &a.g {
        Some(p) => read_signal(p, a.selectors.group)?,
        None => f.clone(),
    };
    let verify = a
        .verify
        .as_deref()
        .map(|p| read_signal(p, a.selectors.group))
        .transpose()?;
    let mu = resolve_measure(a.selectors.measure, f.group())?;
    let l = resolve_pairing(a.pairing, &f, &g)?;
    let cx = Ctx {
        f: &f,
        g: &g,
        l: &l,
        mu: &mu,
        variant: a.variant.into(),
        tol: a.tol,
    };
    let rows = run_checks(&cx, verify.as_ref()).map_err(Failure::from)?;
    let failed = rows.iter().any(|r| r.status == Status::Fail);
    let mut table = format!(
        "{:<20} {:<26} {:>14} {:>14} {:>12}\n",
        "check", "status", "lhs", "rhs", "deviation"
    );
    let mut csv = String::from("check,status,lhs,rhs,deviation\n");
    for r in &rows {
        let _ = writeln!(
            table,
            "{:<20} {:<26} {:>14.6e} {:>14.6e} {:>12.3e}",
            r.check,
            r.status.label(),
            r.lhs,
            r.rhs,
            r.deviation
        );
        let _ = writeln!(
            csv,
            "{},{},{},{},{}",
            r.check,
            r.status.label(),
            r.lhs,
            r.rhs,
            r.deviation
        );
    }
    for r in rows.iter().filter(|r| !r.note.is_empty()) {
        let _ = writeln!(table, "note: {}: {}", r.check, r.note);
    }
    let _ = writeln!(
        table,
        "{}",
        if failed {
            "FAILED"
        } else {
            "all applicable checks pass"
        }
    );
    emit_report(
        &a.out,
        &Report {
            table,
            csv,
            json: &rows,
        },
    )?;
    Ok(if failed { EXIT_CHECK_FAILED } else { EXIT_OK })
}
