//! Input-output trajectories, stacked data windows, and the set of states
//! consistent with one output measurement.

use std::io::{Read, Write};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::linalg;
use crate::sets::Zonotope;
use crate::{Error, Result};

type TrajectoryRows = (String, Vec<DVector<f64>>, Vec<DVector<f64>>);

/// One recorded experiment: `inputs[k]` is applied at time `k` and
/// `outputs[k]` is measured at time `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub id: String,
    pub inputs: Vec<DVector<f64>>,
    pub outputs: Vec<DVector<f64>>,
}

impl Trajectory {
    pub fn new(
        id: impl Into<String>,
        inputs: Vec<DVector<f64>>,
        outputs: Vec<DVector<f64>>,
    ) -> Result<Self> {
        if inputs.len() != outputs.len() {
            return Err(Error::dims(
                "trajectory length",
                inputs.len(),
                outputs.len(),
            ));
        }
        if inputs.len() < 2 {
            return Err(Error::InvalidArgument(format!(
                "trajectory needs at least 2 samples, got {}",
                inputs.len()
            )));
        }
        Ok(Self {
            id: id.into(),
            inputs,
            outputs,
        })
    }

    pub fn len(&self) -> usize {
        self.outputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outputs.is_empty()
    }

    /// Number of successor pairs this trajectory contributes to a window.
    pub fn transitions(&self) -> usize {
        self.len().saturating_sub(1)
    }
}

/// Where a window column came from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColumnSource {
    pub trajectory: String,
    /// Time index of the `Y_-` entry inside its trajectory.
    pub k: usize,
}

/// One window column: `y_plus` is the successor of `y_minus` under `u_minus`.
#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub y_minus: DVector<f64>,
    pub u_minus: DVector<f64>,
    pub y_plus: DVector<f64>,
    pub source: ColumnSource,
}

/// Stacked data `Y_+`, `Y_-`, `U_-`. Column `j` of `Y_+` is the one-step
/// successor of column `j` of `Y_-` inside the same trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct DataWindow {
    y_plus: DMatrix<f64>,
    y_minus: DMatrix<f64>,
    u_minus: DMatrix<f64>,
    sources: Vec<ColumnSource>,
}

impl DataWindow {
    /// Concatenates the successor pairs of every trajectory, trajectory by
    /// trajectory and time-ascending. Pairs never straddle two trajectories.
    pub fn build(trajectories: &[Trajectory]) -> Result<Self> {
        let first = trajectories
            .first()
            .ok_or_else(|| Error::InvalidArgument("no trajectories to build a window".into()))?;
        let n_y = first.outputs[0].len();
        let n_u = first.inputs[0].len();
        let total: usize = trajectories.iter().map(Trajectory::transitions).sum();

        let mut y_plus = DMatrix::zeros(n_y, total);
        let mut y_minus = DMatrix::zeros(n_y, total);
        let mut u_minus = DMatrix::zeros(n_u, total);
        let mut sources = Vec::with_capacity(total);
        let mut j = 0;
        for traj in trajectories {
            if traj.len() < 2 {
                return Err(Error::InvalidArgument(format!(
                    "trajectory {} has fewer than 2 samples",
                    traj.id
                )));
            }
            for k in 0..traj.transitions() {
                check_len("window output", n_y, &traj.outputs[k])?;
                check_len("window output", n_y, &traj.outputs[k + 1])?;
                check_len("window input", n_u, &traj.inputs[k])?;
                y_minus.set_column(j, &traj.outputs[k]);
                y_plus.set_column(j, &traj.outputs[k + 1]);
                u_minus.set_column(j, &traj.inputs[k]);
                sources.push(ColumnSource {
                    trajectory: traj.id.clone(),
                    k,
                });
                j += 1;
            }
        }
        let raw: usize = trajectories.iter().map(Trajectory::len).sum();
        log::info!("data window: {raw} raw samples, {total} usable columns");
        Ok(Self {
            y_plus,
            y_minus,
            u_minus,
            sources,
        })
    }

    pub fn from_matrices(
        y_minus: DMatrix<f64>,
        u_minus: DMatrix<f64>,
        y_plus: DMatrix<f64>,
    ) -> Result<Self> {
        let t = y_minus.ncols();
        if y_plus.ncols() != t {
            return Err(Error::dims("window Y+ columns", t, y_plus.ncols()));
        }
        if u_minus.ncols() != t {
            return Err(Error::dims("window U- columns", t, u_minus.ncols()));
        }
        if y_plus.nrows() != y_minus.nrows() {
            return Err(Error::dims(
                "window Y+ rows",
                y_minus.nrows(),
                y_plus.nrows(),
            ));
        }
        let sources = (0..t)
            .map(|k| ColumnSource {
                trajectory: "matrix".into(),
                k,
            })
            .collect();
        Ok(Self {
            y_plus,
            y_minus,
            u_minus,
            sources,
        })
    }

    pub fn y_plus(&self) -> &DMatrix<f64> {
        &self.y_plus
    }

    pub fn y_minus(&self) -> &DMatrix<f64> {
        &self.y_minus
    }

    pub fn u_minus(&self) -> &DMatrix<f64> {
        &self.u_minus
    }

    pub fn sources(&self) -> &[ColumnSource] {
        &self.sources
    }

    /// Number of columns `T`.
    pub fn len(&self) -> usize {
        self.y_plus.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn n_y(&self) -> usize {
        self.y_plus.nrows()
    }

    pub fn n_u(&self) -> usize {
        self.u_minus.nrows()
    }

    pub fn column(&self, j: usize) -> Transition {
        Transition {
            y_minus: self.y_minus.column(j).into_owned(),
            u_minus: self.u_minus.column(j).into_owned(),
            y_plus: self.y_plus.column(j).into_owned(),
            source: self.sources[j].clone(),
        }
    }

    /// Drops the oldest column and appends `prev_output → new_output` under
    /// `new_input`. Returns the new window and the dropped column.
    pub fn slide(
        &self,
        new_input: &DVector<f64>,
        prev_output: &DVector<f64>,
        new_output: &DVector<f64>,
        source: ColumnSource,
    ) -> Result<(DataWindow, Transition)> {
        if self.is_empty() {
            return Err(Error::InvalidArgument(
                "cannot slide an empty window".into(),
            ));
        }
        check_len("slide input", self.n_u(), new_input)?;
        check_len("slide previous output", self.n_y(), prev_output)?;
        check_len("slide output", self.n_y(), new_output)?;
        let dropped = self.column(0);
        let t = self.len();
        let shift = |m: &DMatrix<f64>, last: &DVector<f64>| {
            let mut out = DMatrix::zeros(m.nrows(), t);
            out.columns_mut(0, t - 1).copy_from(&m.columns(1, t - 1));
            out.set_column(t - 1, last);
            out
        };
        let mut sources = self.sources[1..].to_vec();
        sources.push(source);
        Ok((
            DataWindow {
                y_plus: shift(&self.y_plus, new_output),
                y_minus: shift(&self.y_minus, prev_output),
                u_minus: shift(&self.u_minus, new_input),
                sources,
            },
            dropped,
        ))
    }

    /// Inverse of [`DataWindow::slide`]: re-inserts `dropped` at the front and
    /// removes the newest column.
    pub fn slide_back(&self, dropped: &Transition) -> Result<DataWindow> {
        if self.is_empty() {
            return Err(Error::InvalidArgument(
                "cannot slide an empty window".into(),
            ));
        }
        check_len("slide input", self.n_u(), &dropped.u_minus)?;
        check_len("slide output", self.n_y(), &dropped.y_plus)?;
        let t = self.len();
        let unshift = |m: &DMatrix<f64>, first: &DVector<f64>| {
            let mut out = DMatrix::zeros(m.nrows(), t);
            out.set_column(0, first);
            out.columns_mut(1, t - 1).copy_from(&m.columns(0, t - 1));
            out
        };
        let mut sources = vec![dropped.source.clone()];
        sources.extend_from_slice(&self.sources[..t - 1]);
        Ok(DataWindow {
            y_plus: unshift(&self.y_plus, &dropped.y_plus),
            y_minus: unshift(&self.y_minus, &dropped.y_minus),
            u_minus: unshift(&self.u_minus, &dropped.u_minus),
            sources,
        })
    }
}

fn check_len(context: &'static str, expected: usize, v: &DVector<f64>) -> Result<()> {
    if v.len() != expected {
        return Err(Error::dims(context, expected, v.len()));
    }
    Ok(())
}

/// Known structure of the plant: dimensions, output map `H` (full row rank)
/// and the state bound `η` with `‖x‖∞ ≤ η`.
#[derive(Debug, Clone, PartialEq)]
pub struct PlantDimensions {
    pub n_x: usize,
    pub n_u: usize,
    pub n_y: usize,
    h: DMatrix<f64>,
    eta: f64,
    h_pinv: DMatrix<f64>,
    g_eta: DMatrix<f64>,
}

impl PlantDimensions {
    pub fn new(h: DMatrix<f64>, n_u: usize, eta: f64) -> Result<Self> {
        let (n_y, n_x) = h.shape();
        if n_y > n_x {
            return Err(Error::InvalidArgument(format!(
                "output dimension {n_y} exceeds state dimension {n_x}"
            )));
        }
        if !(eta > 0.0) || !eta.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "state bound eta must be positive and finite, got {eta}"
            )));
        }
        let h_pinv = pseudo_right_inverse(&h)?;
        let g_eta = DMatrix::identity(n_x, n_x) - &h_pinv * &h;
        Ok(Self {
            n_x,
            n_u,
            n_y,
            h,
            eta,
            h_pinv,
            g_eta,
        })
    }

    pub fn h(&self) -> &DMatrix<f64> {
        &self.h
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    /// `H† = Hᵀ (H Hᵀ)⁻¹`.
    pub fn h_pinv(&self) -> &DMatrix<f64> {
        &self.h_pinv
    }

    /// `g_η = I − H† H`, zero when `H` is square.
    pub fn g_eta(&self) -> &DMatrix<f64> {
        &self.g_eta
    }

    /// `Z_η = ⟨0, η I⟩`.
    pub fn state_box(&self) -> Zonotope {
        Zonotope::new(
            DVector::zeros(self.n_x),
            DMatrix::identity(self.n_x, self.n_x) * self.eta,
        )
        .expect("square generator")
    }
}

/// Right inverse of a full-row-rank `H`; `H H† = I`.
pub fn pseudo_right_inverse(h: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    linalg::right_inverse(h, "output matrix H")
}

/// States consistent with the measurement `y`:
/// `⟨H†(y − c_v), [H† G_v, η g_η]⟩`.
pub fn state_from_output(
    y: &DVector<f64>,
    zv: &Zonotope,
    dims: &PlantDimensions,
) -> Result<Zonotope> {
    check_len("measured output", dims.n_y, y)?;
    if zv.dim() != dims.n_y {
        return Err(Error::dims("measurement noise set", dims.n_y, zv.dim()));
    }
    Zonotope::point(y.clone())
        .minkowski_difference(zv)?
        .linear_map(dims.h_pinv())?
        .minkowski_sum(&dims.state_box().linear_map(dims.g_eta())?)
}

/// Writes trajectories as `traj_id,k,u_1..u_nu,y_1..y_ny`.
pub fn write_trajectories_csv<W: Write>(writer: W, trajectories: &[Trajectory]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let (n_u, n_y) = match trajectories.first() {
        Some(t) => (t.inputs[0].len(), t.outputs[0].len()),
        None => (0, 0),
    };
    let mut header = vec!["traj_id".to_string(), "k".to_string()];
    header.extend((1..=n_u).map(|i| format!("u_{i}")));
    header.extend((1..=n_y).map(|i| format!("y_{i}")));
    w.write_record(&header)?;
    for traj in trajectories {
        for k in 0..traj.len() {
            let mut rec = vec![traj.id.clone(), k.to_string()];
            rec.extend(traj.inputs[k].iter().map(|v| format_float(*v)));
            rec.extend(traj.outputs[k].iter().map(|v| format_float(*v)));
            w.write_record(&rec)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Reads the format written by [`write_trajectories_csv`]. Rows of one
/// trajectory must be contiguous and ordered by `k`.
pub fn read_trajectories_csv<R: Read>(reader: R) -> Result<Vec<Trajectory>> {
    let mut r = csv::Reader::from_reader(reader);
    let header = r.headers()?.clone();
    if header.get(0) != Some("traj_id") || header.get(1) != Some("k") {
        return Err(Error::InvalidArgument(
            "trajectory CSV must start with traj_id,k".into(),
        ));
    }
    let n_u = header.iter().filter(|h| h.starts_with("u_")).count();
    let n_y = header.iter().filter(|h| h.starts_with("y_")).count();
    if header.len() != 2 + n_u + n_y {
        return Err(Error::InvalidArgument(format!(
            "unexpected trajectory CSV header: {header:?}"
        )));
    }

    let mut out: Vec<TrajectoryRows> = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec?;
        let id = rec[0].to_string();
        let k: usize = rec[1].parse().map_err(|_| {
            Error::InvalidArgument(format!("row {}: bad k '{}'", line + 2, &rec[1]))
        })?;
        let mut vals = Vec::with_capacity(n_u + n_y);
        for field in rec.iter().skip(2) {
            vals.push(field.parse::<f64>().map_err(|_| {
                Error::InvalidArgument(format!("row {}: bad number '{field}'", line + 2))
            })?);
        }
        let u = DVector::from_column_slice(&vals[..n_u]);
        let y = DVector::from_column_slice(&vals[n_u..]);
        match out.last_mut() {
            Some((last, us, ys)) if *last == id => {
                if k != us.len() {
                    return Err(Error::InvalidArgument(format!(
                        "row {}: trajectory {id} expected k = {}, got {k}",
                        line + 2,
                        us.len()
                    )));
                }
                us.push(u);
                ys.push(y);
            }
            _ => {
                if k != 0 {
                    return Err(Error::InvalidArgument(format!(
                        "row {}: trajectory {id} must start at k = 0",
                        line + 2
                    )));
                }
                out.push((id, vec![u], vec![y]));
            }
        }
    }
    out.into_iter()
        .map(|(id, us, ys)| Trajectory::new(id, us, ys))
        .collect()
}

/// Ground-truth sidecar `traj_id,k,x_1..x_nx`.
pub fn write_states_csv<W: Write>(writer: W, states: &[(String, Vec<DVector<f64>>)]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let n_x = states
        .first()
        .and_then(|(_, xs)| xs.first())
        .map_or(0, |x| x.len());
    let mut header = vec!["traj_id".to_string(), "k".to_string()];
    header.extend((1..=n_x).map(|i| format!("x_{i}")));
    w.write_record(&header)?;
    for (id, xs) in states {
        for (k, x) in xs.iter().enumerate() {
            let mut rec = vec![id.clone(), k.to_string()];
            rec.extend(x.iter().map(|v| format_float(*v)));
            w.write_record(&rec)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Shortest representation that parses back to the same `f64`.
pub(crate) fn format_float(v: f64) -> String {
    format!("{v:?}")
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use nalgebra::dvector;

    fn scalar_traj(id: &str, ys: &[f64]) -> Trajectory {
        Trajectory::new(
            id,
            ys.iter().map(|&y| dvector![y * 10.0]).collect(),
            ys.iter().map(|&y| dvector![y]).collect(),
        )
        .unwrap()
    }

    #[test]
    fn single_trajectory_window() {
        let ys: Vec<f64> = (0..10).map(f64::from).collect();
        let w = DataWindow::build(&[scalar_traj("a", &ys)]).unwrap();
        assert_eq!(w.len(), 9);
    }

    #[test]
    fn no_stitching_across_trajectories() {
        let w = DataWindow::build(&[
            scalar_traj("1", &[1.0, 2.0, 3.0]),
            scalar_traj("2", &[4.0, 5.0]),
        ])
        .unwrap();
        assert_eq!(
            w.y_minus().row(0).iter().copied().collect::<Vec<_>>(),
            vec![1.0, 2.0, 4.0]
        );
        assert_eq!(
            w.y_plus().row(0).iter().copied().collect::<Vec<_>>(),
            vec![2.0, 3.0, 5.0]
        );
        assert_eq!(
            w.u_minus().row(0).iter().copied().collect::<Vec<_>>(),
            vec![10.0, 20.0, 40.0]
        );
        assert_eq!(
            w.sources()[2],
            ColumnSource {
                trajectory: "2".into(),
                k: 0
            }
        );
    }

    #[test]
    fn fifty_by_ten_gives_450_columns() {
        let trajs: Vec<_> = (0..50)
            .map(|i| scalar_traj(&i.to_string(), &[0.0; 10]))
            .collect();
        assert_eq!(DataWindow::build(&trajs).unwrap().len(), 450);
    }

    #[test]
    fn empty_list_rejected() {
        assert!(DataWindow::build(&[]).is_err());
        assert!(Trajectory::new("x", vec![dvector![0.0]], vec![dvector![0.0]]).is_err());
    }

    #[test]
    fn slide_then_slide_back_restores() {
        let w = DataWindow::build(&[scalar_traj("a", &[1.0, 2.0, 3.0, 4.0])]).unwrap();
        let src = ColumnSource {
            trajectory: "online".into(),
            k: 0,
        };
        let (w2, dropped) = w
            .slide(&dvector![7.0], &dvector![4.0], &dvector![5.0], src)
            .unwrap();
        assert_eq!(w2.len(), w.len());
        assert_eq!(w2.y_plus()[(0, 2)], 5.0);
        assert_eq!(w2.y_minus()[(0, 2)], 4.0);
        assert_eq!(w2.slide_back(&dropped).unwrap(), w);
    }

    #[test]
    fn slide_checks_dimensions() {
        let w = DataWindow::build(&[scalar_traj("a", &[1.0, 2.0])]).unwrap();
        let src = ColumnSource {
            trajectory: "o".into(),
            k: 0,
        };
        assert!(w
            .slide(&dvector![1.0, 2.0], &dvector![1.0], &dvector![1.0], src)
            .is_err());
    }

    #[test]
    fn pseudo_right_inverse_examples() {
        let i = DMatrix::<f64>::identity(2, 2);
        assert_relative_eq!(pseudo_right_inverse(&i).unwrap(), i, epsilon = 1e-15);
        let h = DMatrix::from_row_slice(1, 2, &[1.0, 0.0]);
        assert_relative_eq!(
            pseudo_right_inverse(&h).unwrap(),
            DMatrix::from_row_slice(2, 1, &[1.0, 0.0]),
            epsilon = 1e-15
        );
        let hp = DMatrix::from_row_slice(2, 2, &[1.0, 0.001, -0.01, 1.0]);
        let prod = &hp * pseudo_right_inverse(&hp).unwrap();
        assert_relative_eq!(prod, DMatrix::identity(2, 2), epsilon = 1e-12);
        let rank1 = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 2.0, 2.0]);
        assert!(matches!(
            pseudo_right_inverse(&rank1),
            Err(Error::RankDeficient { .. })
        ));
    }

    #[test]
    fn state_from_output_identity_cases() {
        let dims = PlantDimensions::new(DMatrix::identity(2, 2), 1, 5.0).unwrap();
        let y = dvector![1.0, -2.0];
        let s = state_from_output(&y, &Zonotope::origin(2), &dims).unwrap();
        assert_eq!(s.center(), &y);
        assert!(s.generators().iter().all(|&g| g == 0.0));

        let zv = Zonotope::from_diagonal(&[0.0, 0.0], &[0.1, 0.1]).unwrap();
        let s = state_from_output(&y, &zv, &dims).unwrap();
        let hull = s.to_interval();
        assert_relative_eq!(hull.lower(), &dvector![0.9, -2.1], epsilon = 1e-15);
        assert_relative_eq!(hull.upper(), &dvector![1.1, -1.9], epsilon = 1e-15);
    }

    #[test]
    fn state_from_output_wide_h_uses_eta() {
        let h = DMatrix::from_row_slice(1, 2, &[1.0, 0.0]);
        let dims = PlantDimensions::new(h, 1, 3.0).unwrap();
        let s = state_from_output(&dvector![0.5], &Zonotope::origin(1), &dims).unwrap();
        let hull = s.to_interval();
        assert_relative_eq!(hull.lower(), &dvector![0.5, -3.0], epsilon = 1e-15);
        assert_relative_eq!(hull.upper(), &dvector![0.5, 3.0], epsilon = 1e-15);
    }

    #[test]
    fn dimensions_reject_bad_input() {
        assert!(PlantDimensions::new(DMatrix::identity(2, 2), 1, 0.0).is_err());
        assert!(PlantDimensions::new(DMatrix::zeros(3, 2), 1, 1.0).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let trajs = vec![
            Trajectory::new(
                "a",
                vec![dvector![0.1, 0.2], dvector![0.3, -0.4]],
                vec![dvector![1.0 / 3.0], dvector![2.5]],
            )
            .unwrap(),
            Trajectory::new(
                "b",
                vec![dvector![1.0, 2.0]; 3],
                vec![dvector![-1e-17], dvector![7.0], dvector![8.0]],
            )
            .unwrap(),
        ];
        let mut buf = Vec::new();
        write_trajectories_csv(&mut buf, &trajs).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("traj_id,k,u_1,u_2,y_1\n"));
        assert_eq!(read_trajectories_csv(buf.as_slice()).unwrap(), trajs);
    }

    #[test]
    fn csv_rejects_gaps() {
        let text = "traj_id,k,u_1,y_1\na,0,1,1\na,2,1,1\n";
        assert!(read_trajectories_csv(text.as_bytes()).is_err());
    }
}
