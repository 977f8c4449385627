//! CSV tables behind the six result figures.

use std::fs;
use std::io;
use std::path::Path;

use crate::eval::experiment::{EvalReport, Metric};
use crate::rank::ModeKind;

/// File names in the order [`EvalReport::csv_tables`] returns them.
pub const CSV_FILES: [&str; 6] = [
    "fig1_cd.csv",
    "fig2_rprecision.csv",
    "fig3_cd_avg.csv",
    "fig4_rp_avg.csv",
    "fig5_cd_diff.csv",
    "fig6_rp_diff.csv",
];

fn cell(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn table(header: &[&str], rows: Vec<Vec<String>>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("writing to memory");
    for row in rows {
        w.write_record(&row).expect("writing to memory");
    }
    String::from_utf8(w.into_inner().expect("flushing to memory")).expect("csv output is utf-8")
}

impl EvalReport {
    /// `(file name, contents)` for all six tables. Missing values (a mode the
    /// plan did not run, a session without clicks) are empty cells.
    pub fn csv_tables(&self) -> Vec<(&'static str, String)> {
        use ModeKind::{Binary, Cosine, Random};
        let n = self.users.len();
        let last = self.plan.experimental_sessions;

        let fig1 = table(
            &["user_id", "session", "cosine_c_d", "random_c_d"],
            (0..n)
                .map(|u| {
                    vec![
                        self.users[u].user_id.clone(),
                        last.to_string(),
                        cell(self.final_value(u, Cosine, Metric::CD)),
                        cell(self.final_value(u, Random, Metric::CD)),
                    ]
                })
                .collect(),
        );

        let mut fig2_rows = Vec::new();
        for u in 0..n {
            let fit = self.trend(u, Cosine, Metric::RPrecision);
            for (s, rp) in self.points(u, Cosine, Metric::RPrecision) {
                fig2_rows.push(vec![
                    self.users[u].user_id.clone(),
                    s.to_string(),
                    rp.to_string(),
                    cell(fit.map(|f| f.0)),
                    cell(fit.map(|(slope, icpt)| icpt + slope * s)),
                ]);
            }
        }
        let fig2 = table(
            &["user_id", "session", "r_precision", "trend_slope", "trend_fit"],
            fig2_rows,
        );

        let averages = |metric: Metric, header: &[&str]| {
            table(
                header,
                (0..n)
                    .map(|u| {
                        vec![
                            self.users[u].user_id.clone(),
                            cell(self.mean_value(u, Cosine, metric)),
                            cell(self.mean_value(u, Binary, metric)),
                        ]
                    })
                    .collect(),
            )
        };
        let fig3 = averages(Metric::CD, &["user_id", "cosine_mean_c_d", "binary_mean_c_d"]);
        let fig4 = averages(
            Metric::RPrecision,
            &["user_id", "cosine_mean_r_precision", "binary_mean_r_precision"],
        );

        let diff = |metric: Metric| {
            table(
                &["session", "mean_diff", "stddev", "n_users"],
                self.difference(metric, Cosine, Binary)
                    .unwrap_or_default()
                    .into_iter()
                    .map(|p| {
                        vec![
                            p.session.to_string(),
                            cell(p.mean_diff),
                            cell(p.stddev),
                            p.n_users.to_string(),
                        ]
                    })
                    .collect(),
            )
        };
        let fig5 = diff(Metric::CD);
        let fig6 = diff(Metric::RPrecision);

        CSV_FILES
            .into_iter()
            .zip([fig1, fig2, fig3, fig4, fig5, fig6])
            .collect()
    }

    /// Writes the six tables into `dir`, creating it if needed.
    pub fn write_csvs(&self, dir: &Path) -> io::Result<()> {
        fs::create_dir_all(dir)?;
        for (name, body) in self.csv_tables() {
            fs::write(dir.join(name), body)?;
        }
        Ok(())
    }
}
