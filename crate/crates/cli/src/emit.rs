//! Files written by the commands: profile and sweep CSVs, JSON documents,
//! gnuplot scripts.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use anyhow::{Context, Result};
use serde::Serialize;

use nodal_core::integrator::Trajectory;
use nodal_core::solver::SweepPoint;
use nodal_core::Nonlinearity;

pub const SWEEP_CSV_VERSION: &str = "nodal-sweep v1";

pub fn write_profile(nl: &Nonlinearity, tr: &Trajectory, path: &Path) -> Result<()> {
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    tr.write_csv(nl, file)?;
    Ok(())
}

pub fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    Ok(())
}

fn join(xs: &[f64]) -> String {
    xs.iter().map(|x| format!("{x:e}")).collect::<Vec<_>>().join(";")
}

/// One row per grid point: `alpha,zero_count,label,Z_list,T_list,I_min`,
/// with `;`-separated radii. Undecided points have an empty zero count.
pub fn write_sweep<W: Write>(nl: &Nonlinearity, points: &[SweepPoint], w: W) -> Result<()> {
    let mut w = BufWriter::new(w);
    writeln!(w, "# {SWEEP_CSV_VERSION}")?;
    writeln!(w, "# f={} m={:e} N={:e}", nl.name, nl.m, nl.n)?;
    writeln!(w, "alpha,zero_count,label,Z_list,T_list,I_min")?;
    for p in points {
        let count = p.zero_count().map(|c| c.to_string()).unwrap_or_default();
        writeln!(
            w,
            "{:e},{count},{},{},{},{:e}",
            p.alpha,
            p.label.class,
            join(&p.zeros),
            join(&p.turnings),
            p.energy_min
        )?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_text(text: &str, path: &Path) -> Result<()> {
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

/// Plots `u` and `u'` against `r` from a profile CSV.
pub fn profile_script(csv: &str, title: &str) -> String {
    format!(
        "set datafile separator ','\n\
         set key autotitle columnhead\n\
         set title \"{title}\"\n\
         set xlabel 'r'\n\
         set grid\n\
         plot '{csv}' using 1:2 with lines lw 2, \\\n     \
         '{csv}' using 1:3 with lines dt 2, \\\n     \
         0 notitle lc rgb 'gray'\n\
         pause mouse close\n"
    )
}

/// Band diagram: zero count against `α`.
pub fn sweep_script(csv: &str, title: &str) -> String {
    format!(
        "set datafile separator ','\n\
         set title \"{title}\"\n\
         set xlabel 'alpha'\n\
         set ylabel 'zeros'\n\
         set grid\n\
         plot '{csv}' every ::1 using 1:2 with steps lw 2 notitle\n\
         pause mouse close\n"
    )
}
