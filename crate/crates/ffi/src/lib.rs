//! C interface to `aucmix`.
//!
//! Every fallible function returns an `i32` status (`AUCMIX_OK` on success)
//! and writes results through out-pointers. On failure the message is kept
//! per thread and can be read with [`aucmix_last_error`]. Models and datasets
//! are opaque handles owned by the caller and released with their `_free`
//! function. Panics never cross the boundary; they surface as
//! `AUCMIX_ERR_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;
use std::slice;

use aucmix::augment::{
    generate_synthetic, read_table, split_stratified, LabeledDataset, SyntheticSpec,
};
use aucmix::diffcore::{load_model, save_model, Activation, DiffModel, Tensor};
use aucmix::losses::{auc_mixup_grads, auc_mixup_value, optimal_aux, AucAuxiliaries};
use aucmix::metrics::auc_rank;
use aucmix::optim::{train, Method, TrainConfig};
use aucmix::Error;

pub const AUCMIX_OK: i32 = 0;
pub const AUCMIX_ERR_NULL_POINTER: i32 = 1;
pub const AUCMIX_ERR_INVALID_ARGUMENT: i32 = 2;
pub const AUCMIX_ERR_SHAPE: i32 = 3;
pub const AUCMIX_ERR_DEGENERATE_BATCH: i32 = 4;
pub const AUCMIX_ERR_UNDEFINED_METRIC: i32 = 5;
pub const AUCMIX_ERR_IO: i32 = 6;
pub const AUCMIX_ERR_FORMAT: i32 = 7;
pub const AUCMIX_ERR_DIVERGED: i32 = 8;
pub const AUCMIX_ERR_PANIC: i32 = 9;

pub const AUCMIX_ACTIVATION_IDENTITY: i32 = 0;
pub const AUCMIX_ACTIVATION_TANH: i32 = 1;
pub const AUCMIX_ACTIVATION_RELU: i32 = 2;

pub const AUCMIX_METHOD_CE: i32 = 0;
pub const AUCMIX_METHOD_FOCAL: i32 = 1;
pub const AUCMIX_METHOD_AUCM: i32 = 2;
pub const AUCMIX_METHOD_AUC_MIXUP: i32 = 3;
pub const AUCMIX_METHOD_CT_AUC: i32 = 4;
pub const AUCMIX_METHOD_CT_MIXUP: i32 = 5;

/// Multilayer perceptron with a scalar output.
pub struct AucmixModel(DiffModel);

/// Binary-labelled dataset.
pub struct AucmixDataset(LabeledDataset);

/// Auxiliary variables of the min-max AUC objective.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AucmixAux {
    pub a: f64,
    pub b: f64,
    pub alpha: f64,
    pub margin: f64,
}

/// Subset of the training configuration exposed over the C interface.
/// Fill it with [`aucmix_train_options_default`] and override fields.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AucmixTrainOptions {
    pub method: i32,
    pub lr: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub pos_fraction: f64,
    pub margin: f64,
    pub weight_decay: f64,
    pub epoch_decay: f64,
    /// Beta(β, β) shape of the mixing coefficient.
    pub mixup_alpha: f64,
    /// Width of the single hidden layer; 0 trains a linear scorer.
    pub hidden_width: usize,
    pub activation: i32,
    pub sigmoid_output: bool,
    pub seed: u64,
    pub train_fraction: f64,
    pub valid_fraction: f64,
    pub test_fraction: f64,
    pub split_seed: u64,
}

/// Scalar results of a training run.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AucmixTrainSummary {
    pub best_epoch: usize,
    pub best_valid_auc: f64,
    pub test_auc: f64,
    pub final_train_loss: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

struct Failure(i32, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::Shape(_) => AUCMIX_ERR_SHAPE,
            Error::Config(_) | Error::Parse { .. } => AUCMIX_ERR_INVALID_ARGUMENT,
            Error::DegenerateBatch { .. } => AUCMIX_ERR_DEGENERATE_BATCH,
            Error::UndefinedMetric(_) => AUCMIX_ERR_UNDEFINED_METRIC,
            Error::Format(_) | Error::Json(_) => AUCMIX_ERR_FORMAT,
            Error::Diverged { .. } => AUCMIX_ERR_DIVERGED,
            Error::Io { .. } => AUCMIX_ERR_IO,
        };
        Failure(code, e.to_string())
    }
}

fn invalid(msg: impl Into<String>) -> Failure {
    Failure(AUCMIX_ERR_INVALID_ARGUMENT, msg.into())
}

fn null(what: &str) -> Failure {
    Failure(AUCMIX_ERR_NULL_POINTER, format!("`{what}` is null"))
}

/// Runs `f`, turning errors and panics into a status code.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> i32 {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => AUCMIX_OK,
        Ok(Err(Failure(code, msg))) => {
            set_last_error(msg);
            code
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error(format!("internal error: {msg}"));
            AUCMIX_ERR_PANIC
        }
    }
}

unsafe fn input<'a, T>(p: *const T, n: usize, what: &str) -> Result<&'a [T], Failure> {
    if n == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(slice::from_raw_parts(p, n))
}

unsafe fn output<'a, T>(p: *mut T, n: usize, what: &str) -> Result<&'a mut [T], Failure> {
    if n == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(slice::from_raw_parts_mut(p, n))
}

unsafe fn write<T>(p: *mut T, v: T, what: &str) -> Result<(), Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    p.write(v);
    Ok(())
}

unsafe fn borrow<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn path_arg(p: *const c_char) -> Result<PathBuf, Failure> {
    if p.is_null() {
        return Err(null("path"));
    }
    let s = CStr::from_ptr(p)
        .to_str()
        .map_err(|_| invalid("path is not valid UTF-8"))?;
    Ok(PathBuf::from(s))
}

fn activation(code: i32) -> Result<Activation, Failure> {
    u32::try_from(code)
        .ok()
        .and_then(Activation::from_tag)
        .ok_or_else(|| invalid(format!("unknown activation code {code}")))
}

fn method(code: i32) -> Result<Method, Failure> {
    usize::try_from(code)
        .ok()
        .and_then(|i| Method::ALL.get(i).copied())
        .ok_or_else(|| invalid(format!("unknown method code {code}")))
}

fn features(x: *const f64, rows: usize, cols: usize) -> Result<Tensor, Failure> {
    let n = rows
        .checked_mul(cols)
        .ok_or_else(|| invalid("feature matrix too large"))?;
    let data = unsafe { input(x, n, "features")? };
    Ok(Tensor::from_vec(rows, cols, data.to_vec())?)
}

fn aux_of(a: &AucmixAux) -> AucAuxiliaries {
    AucAuxiliaries {
        a: a.a,
        b: a.b,
        alpha: a.alpha,
        margin: a.margin,
    }
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn aucmix_version() -> *const c_char {
    static VERSION: &str = concat!(env!("CARGO_PKG_VERSION"), "\0");
    VERSION.as_ptr().cast()
}

/// Message of the last failed call on this thread, or null if none failed.
/// The pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn aucmix_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Creates a randomly initialised network. `dims` lists the layer widths
/// from input to output; the last entry must be 1.
///
/// # Safety
/// `dims` must point to `n_dims` values and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn aucmix_model_new(
    dims: *const usize,
    n_dims: usize,
    activation_code: i32,
    sigmoid_output: bool,
    seed: u64,
    out: *mut *mut AucmixModel,
) -> i32 {
    guard(|| {
        let dims = input(dims, n_dims, "dims")?;
        let model =
            DiffModel::init(dims, activation(activation_code)?, seed)?.with_sigmoid(sigmoid_output);
        write(out, Box::into_raw(Box::new(AucmixModel(model))), "out")
    })
}

/// Releases a model. Null is ignored.
///
/// # Safety
/// `model` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn aucmix_model_free(model: *mut AucmixModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// # Safety
/// `model` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn aucmix_model_num_params(
    model: *const AucmixModel,
    out: *mut usize,
) -> i32 {
    guard(|| write(out, borrow(model, "model")?.0.num_params(), "out"))
}

/// # Safety
/// `model` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn aucmix_model_input_dim(model: *const AucmixModel, out: *mut usize) -> i32 {
    guard(|| write(out, borrow(model, "model")?.0.input_dim(), "out"))
}

/// Scores `rows` samples stored row-major in `x` (`rows × cols`) into `out`.
///
/// # Safety
/// `x` must hold `rows * cols` values and `out` room for `rows`.
#[no_mangle]
pub unsafe extern "C" fn aucmix_model_forward(
    model: *const AucmixModel,
    x: *const f64,
    rows: usize,
    cols: usize,
    out: *mut f64,
) -> i32 {
    guard(|| {
        let m = borrow(model, "model")?;
        let scores = m.0.scores(&features(x, rows, cols)?)?;
        output(out, rows, "out")?.copy_from_slice(&scores);
        Ok(())
    })
}

/// Copies the flattened parameters (per layer: weights row-major, then bias).
///
/// # Safety
/// `out` must have room for `len` values; `len` must equal the parameter count.
#[no_mangle]
pub unsafe extern "C" fn aucmix_model_get_params(
    model: *const AucmixModel,
    out: *mut f64,
    len: usize,
) -> i32 {
    guard(|| {
        let p = borrow(model, "model")?.0.flat_params();
        if p.len() != len {
            return Err(Failure(
                AUCMIX_ERR_SHAPE,
                format!("model has {} parameters, buffer holds {len}", p.len()),
            ));
        }
        output(out, len, "out")?.copy_from_slice(&p);
        Ok(())
    })
}

/// # Safety
/// `params` must hold `len` values.
#[no_mangle]
pub unsafe extern "C" fn aucmix_model_set_params(
    model: *mut AucmixModel,
    params: *const f64,
    len: usize,
) -> i32 {
    guard(|| {
        let m = model.as_mut().ok_or_else(|| null("model"))?;
        Ok(m.0.set_flat_params(input(params, len, "params")?)?)
    })
}

/// # Safety
/// `path` must be a NUL-terminated UTF-8 string.
#[no_mangle]
pub unsafe extern "C" fn aucmix_model_save(model: *const AucmixModel, path: *const c_char) -> i32 {
    guard(|| Ok(save_model(&path_arg(path)?, &borrow(model, "model")?.0)?))
}

/// # Safety
/// `path` must be a NUL-terminated UTF-8 string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn aucmix_model_load(path: *const c_char, out: *mut *mut AucmixModel) -> i32 {
    guard(|| {
        let m = load_model(&path_arg(path)?)?;
        write(out, Box::into_raw(Box::new(AucmixModel(m))), "out")
    })
}

/// Builds a dataset from row-major features and 0/1 labels.
///
/// # Safety
/// `x` must hold `rows * cols` values, `labels` `rows` values, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn aucmix_dataset_new(
    x: *const f64,
    rows: usize,
    cols: usize,
    labels: *const u8,
    out: *mut *mut AucmixDataset,
) -> i32 {
    guard(|| {
        let y = input(labels, rows, "labels")?.to_vec();
        let ds = LabeledDataset::new(features(x, rows, cols)?, y, "ffi")?;
        write(out, Box::into_raw(Box::new(AucmixDataset(ds))), "out")
    })
}

/// Gaussian two-class data with `round(n · ratio)` positives.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn aucmix_dataset_synthetic(
    n: usize,
    d: usize,
    imbalance_ratio: f64,
    class_separation: f64,
    noise: f64,
    seed: u64,
    out: *mut *mut AucmixDataset,
) -> i32 {
    guard(|| {
        let ds = generate_synthetic(&SyntheticSpec {
            n,
            d,
            imbalance_ratio,
            class_separation,
            noise,
            seed,
        })?;
        write(out, Box::into_raw(Box::new(AucmixDataset(ds))), "out")
    })
}

/// Reads a CSV (`.csv`) or binary table whose last column holds 0/1 labels.
///
/// # Safety
/// `path` must be a NUL-terminated UTF-8 string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn aucmix_dataset_load(
    path: *const c_char,
    out: *mut *mut AucmixDataset,
) -> i32 {
    guard(|| {
        let p = path_arg(path)?;
        let ds = read_table(&p)?.into_binary(p.display().to_string())?;
        write(out, Box::into_raw(Box::new(AucmixDataset(ds))), "out")
    })
}

/// Releases a dataset. Null is ignored.
///
/// # Safety
/// `dataset` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn aucmix_dataset_free(dataset: *mut AucmixDataset) {
    if !dataset.is_null() {
        drop(Box::from_raw(dataset));
    }
}

/// Writes the sample count, feature count and number of positives.
///
/// # Safety
/// `dataset` must be a live handle; the out-pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn aucmix_dataset_shape(
    dataset: *const AucmixDataset,
    n: *mut usize,
    d: *mut usize,
    n_pos: *mut usize,
) -> i32 {
    guard(|| {
        let ds = &borrow(dataset, "dataset")?.0;
        write(n, ds.len(), "n")?;
        write(d, ds.dim(), "d")?;
        write(n_pos, ds.n_pos(), "n_pos")
    })
}

/// Exact AUC with ties counted as one half.
///
/// # Safety
/// `scores` and `labels` must hold `n` values; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn aucmix_auc(
    scores: *const f64,
    labels: *const u8,
    n: usize,
    out: *mut f64,
) -> i32 {
    guard(|| {
        let r = auc_rank(input(scores, n, "scores")?, input(labels, n, "labels")?)?;
        write(out, r.auc, "out")
    })
}

/// Value of the AUC-mixup objective on soft labels in [0, 1].
///
/// # Safety
/// `scores` and `soft_labels` must hold `n` values; `aux` and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn aucmix_auc_mixup_value(
    scores: *const f64,
    soft_labels: *const f64,
    n: usize,
    aux: *const AucmixAux,
    out: *mut f64,
) -> i32 {
    guard(|| {
        let aux = aux_of(borrow(aux, "aux")?);
        let v = auc_mixup_value(
            input(scores, n, "scores")?,
            input(soft_labels, n, "soft_labels")?,
            &aux,
        )?;
        write(out, v, "out")
    })
}

/// Gradient of the AUC-mixup objective: `d_scores` receives `n` values,
/// `d_aux` the partials in `a`, `b` and `alpha` (its `margin` is set to 0).
///
/// # Safety
/// `scores`, `soft_labels` and `d_scores` must hold `n` values; `aux` and `d_aux` must be valid.
#[no_mangle]
pub unsafe extern "C" fn aucmix_auc_mixup_grads(
    scores: *const f64,
    soft_labels: *const f64,
    n: usize,
    aux: *const AucmixAux,
    d_scores: *mut f64,
    d_aux: *mut AucmixAux,
) -> i32 {
    guard(|| {
        let aux = aux_of(borrow(aux, "aux")?);
        let g = auc_mixup_grads(
            input(scores, n, "scores")?,
            input(soft_labels, n, "soft_labels")?,
            &aux,
        )?;
        output(d_scores, n, "d_scores")?.copy_from_slice(&g.d_scores);
        write(
            d_aux,
            AucmixAux {
                a: g.d_a,
                b: g.d_b,
                alpha: g.d_alpha,
                margin: 0.0,
            },
            "d_aux",
        )
    })
}

/// Closed-form saddle point of the objective for fixed scores.
///
/// # Safety
/// `scores` and `soft_labels` must hold `n` values; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn aucmix_optimal_aux(
    scores: *const f64,
    soft_labels: *const f64,
    n: usize,
    margin: f64,
    out: *mut AucmixAux,
) -> i32 {
    guard(|| {
        let o = optimal_aux(
            input(scores, n, "scores")?,
            input(soft_labels, n, "soft_labels")?,
            margin,
        )?;
        write(
            out,
            AucmixAux {
                a: o.a,
                b: o.b,
                alpha: o.alpha,
                margin: o.margin,
            },
            "out",
        )
    })
}

/// Library defaults for `method`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn aucmix_train_options_default(
    method_code: i32,
    out: *mut AucmixTrainOptions,
) -> i32 {
    guard(|| {
        let c = TrainConfig::new(method(method_code)?);
        let opts = AucmixTrainOptions {
            method: method_code,
            lr: c.lr,
            epochs: c.epochs,
            batch_size: c.batch_size,
            pos_fraction: c.pos_fraction,
            margin: c.margin,
            weight_decay: c.weight_decay,
            epoch_decay: c.epoch_decay,
            mixup_alpha: c.mixup.beta_alpha,
            hidden_width: c.hidden.first().copied().unwrap_or(0),
            activation: c.activation.tag() as i32,
            sigmoid_output: c.sigmoid_output,
            seed: c.seed,
            train_fraction: 0.7,
            valid_fraction: 0.15,
            test_fraction: 0.15,
            split_seed: 0,
        };
        write(out, opts, "out")
    })
}

/// Splits `dataset`, trains, and returns the best-validation model.
///
/// # Safety
/// `dataset` and `options` must be valid; `model_out` and `summary_out` writable.
/// `summary_out` may be null.
#[no_mangle]
pub unsafe extern "C" fn aucmix_train(
    dataset: *const AucmixDataset,
    options: *const AucmixTrainOptions,
    model_out: *mut *mut AucmixModel,
    summary_out: *mut AucmixTrainSummary,
) -> i32 {
    guard(|| {
        let ds = &borrow(dataset, "dataset")?.0;
        let o = borrow(options, "options")?;
        if model_out.is_null() {
            return Err(null("model_out"));
        }
        let mut cfg = TrainConfig::new(method(o.method)?);
        cfg.lr = o.lr;
        cfg.epochs = o.epochs;
        cfg.batch_size = o.batch_size;
        cfg.pos_fraction = o.pos_fraction;
        cfg.margin = o.margin;
        cfg.weight_decay = o.weight_decay;
        cfg.epoch_decay = o.epoch_decay;
        cfg.mixup.beta_alpha = o.mixup_alpha;
        cfg.hidden = if o.hidden_width == 0 {
            vec![]
        } else {
            vec![o.hidden_width]
        };
        cfg.activation = activation(o.activation)?;
        cfg.sigmoid_output = o.sigmoid_output;
        cfg.seed = o.seed;
        cfg.validate()?;
        let splits = split_stratified(
            ds,
            (o.train_fraction, o.valid_fraction, o.test_fraction),
            o.split_seed,
        )?;
        let outcome = train(&splits, &cfg)?;
        if !summary_out.is_null() {
            summary_out.write(AucmixTrainSummary {
                best_epoch: outcome.best_epoch,
                best_valid_auc: outcome.best_valid_auc,
                test_auc: outcome.test_auc,
                final_train_loss: outcome.train_loss.last().copied().unwrap_or(f64::NAN),
            });
        }
        model_out.write(Box::into_raw(Box::new(AucmixModel(outcome.best_model))));
        Ok(())
    })
}
