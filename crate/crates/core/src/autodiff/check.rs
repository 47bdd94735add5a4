use super::{AutodiffError, ParamStore, Tape, Var};

/// Outcome of comparing reverse-mode gradients with central differences.
#[derive(Clone, Debug)]
pub struct GradCheckReport {
    /// max over entries of `|g_ad - g_fd| / max(1, |g_fd|)`
    pub max_rel_error: f64,
    pub worst_param: String,
    pub worst_index: usize,
    pub entries_checked: usize,
}

/// Checks every trainable parameter entry of `params` against central finite
/// differences of the scalar built by `build`.
pub fn finite_diff_check<F, E>(params: &ParamStore, eps: f64, build: F) -> Result<GradCheckReport, E>
where
    F: for<'a> Fn(&mut Tape<'a>) -> Result<Var, E>,
    E: From<AutodiffError>,
{
    assert!(eps > 0.0, "finite difference step must be positive");
    let analytic = {
        let mut tape = Tape::new(params);
        let root = build(&mut tape)?;
        let value = tape.scalar(root)?;
        if !value.is_finite() {
            return Err(AutodiffError::NonFinite(format!("objective is {value}")).into());
        }
        tape.backward(root)?.params
    };

    let eval = |store: &ParamStore| -> Result<f64, E> {
        let mut tape = Tape::new(store);
        let root = build(&mut tape)?;
        let v = tape.scalar(root)?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(AutodiffError::NonFinite(format!("objective is {v} under perturbation")).into())
        }
    };

    let mut work = params.clone();
    let mut report = GradCheckReport {
        max_rel_error: 0.0,
        worst_param: String::new(),
        worst_index: 0,
        entries_checked: 0,
    };
    let ids: Vec<_> = params.iter().filter(|(_, p)| p.trainable).map(|(id, _)| id).collect();
    for id in ids {
        let shape = params.value(id).shape().to_vec();
        let ad = analytic.dense(id, &shape);
        for i in 0..ad.len() {
            let orig = work.value(id).data()[i];
            work.get_mut(id).value.data_mut()[i] = orig + eps;
            let plus = eval(&work)?;
            work.get_mut(id).value.data_mut()[i] = orig - eps;
            let minus = eval(&work)?;
            work.get_mut(id).value.data_mut()[i] = orig;

            let fd = (plus - minus) / (2.0 * eps);
            let err = (ad.data()[i] - fd).abs() / fd.abs().max(1.0);
            report.entries_checked += 1;
            if err > report.max_rel_error || report.worst_param.is_empty() {
                report.max_rel_error = report.max_rel_error.max(err);
                report.worst_param = params.get(id).name.clone();
                report.worst_index = i;
            }
        }
    }
    Ok(report)
}
