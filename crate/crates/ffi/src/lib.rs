//! C ABI over `csk-core`.
//!
//! Objects cross the boundary as opaque handles created by `*_new` or an
//! operation and released with the matching `*_free`. Every fallible call
//! returns a [`CskStatus`]; the message of the last failure on the calling
//! thread is available from [`csk_last_error_message`].

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use csk_core::channel::{
    crosstalk_channel, lmmse_equalizer, svd_equalizers, zf_equalizer, ChannelModel, EqualizerKind,
    EqualizerSet,
};
use csk_core::designer::multi_start_design;
use csk_core::labeling::bsa_optimize_with_restarts;
use csk_core::model::{ColorProfile, Constellation, DesignSpec, LabelingMap};
use csk_core::rng::rng_from_seed;
use csk_core::simulate::{noise_param_from_osnr, run_ber, SimConfig};
use csk_core::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CskStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidInput = 2,
    InvalidDomain = 3,
    Infeasible = 4,
    SingularChannel = 5,
    DomainViolation = 6,
    BufferTooSmall = 7,
    Internal = 8,
    Panic = 9,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CskProfile {
    Balanced = 0,
    Unbalanced = 1,
    Extreme = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CskEqualizer {
    None = 0,
    SvdPre = 1,
    Zf = 2,
    Lmmse = 3,
}

/// Error counts at one OSNR point.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CskBerPoint {
    pub osnr_db: f64,
    pub n_bits: u64,
    pub bit_errors: u64,
    pub symbol_errors: u64,
    pub ber: f64,
}

/// Opaque design specification.
pub struct CskSpec {
    spec: DesignSpec,
}

/// Opaque designed constellation.
pub struct CskConstellation {
    constellation: Constellation,
    t_star: f64,
    eps: f64,
    equalizer: CskEqualizer,
}

/// Opaque bit-to-symbol labeling.
pub struct CskLabeling {
    labeling: LabelingMap,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> CskStatus {
    match e {
        Error::InvalidInput(_) | Error::InvalidPair { .. } | Error::Config(_) => CskStatus::InvalidInput,
        Error::InvalidDomain(_) | Error::UndefinedPapr { .. } => CskStatus::InvalidDomain,
        Error::InfeasibleSpec(_) => CskStatus::Infeasible,
        Error::SingularChannel | Error::DegenerateChannel | Error::UnsupportedModel(_) => {
            CskStatus::SingularChannel
        }
        Error::DomainViolation(_) => CskStatus::DomainViolation,
        Error::AssemblyBug(_) | Error::Io(_) => CskStatus::Internal,
    }
}

fn guard(f: impl FnOnce() -> Result<(), CskStatus>) -> CskStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => CskStatus::Ok,
        Ok(Err(s)) => s,
        Err(_) => {
            set_error("panic inside csk");
            CskStatus::Panic
        }
    }
}

fn check<T>(r: csk_core::Result<T>) -> Result<T, CskStatus> {
    r.map_err(|e| {
        set_error(&e.to_string());
        status_of(&e)
    })
}

unsafe fn get<'a, T>(p: *const T) -> Result<&'a T, CskStatus> {
    p.as_ref().ok_or_else(|| {
        set_error("null handle");
        CskStatus::NullPointer
    })
}

unsafe fn get_mut<'a, T>(p: *mut T) -> Result<&'a mut T, CskStatus> {
    p.as_mut().ok_or_else(|| {
        set_error("null handle");
        CskStatus::NullPointer
    })
}

unsafe fn put<T>(out: *mut *mut T, v: T) -> Result<(), CskStatus> {
    if out.is_null() {
        set_error("null output pointer");
        return Err(CskStatus::NullPointer);
    }
    *out = Box::into_raw(Box::new(v));
    Ok(())
}

fn invalid(msg: &str) -> CskStatus {
    set_error(msg);
    CskStatus::InvalidInput
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn csk_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Copies the last error message of this thread into `buf` (NUL
/// terminated, truncated to `len`). Returns the full message length.
///
/// # Safety
/// `buf` must be null or valid for `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn csk_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let e = e.borrow();
        let bytes = e.as_bytes();
        if !buf.is_null() && len > 0 {
            let n = bytes.len().min(len - 1);
            ptr::copy_nonoverlapping(bytes.as_ptr().cast(), buf, n);
            *buf.add(n) = 0;
        }
        bytes.len()
    })
}

/// One RGB LED, 8 symbols, unit defaults for the chosen color profile.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn csk_spec_new(profile: CskProfile, out: *mut *mut CskSpec) -> CskStatus {
    guard(|| {
        let p = match profile {
            CskProfile::Balanced => ColorProfile::Balanced,
            CskProfile::Unbalanced => ColorProfile::Unbalanced,
            CskProfile::Extreme => ColorProfile::Extreme,
        };
        put(out, CskSpec { spec: DesignSpec::for_profile(p) })
    })
}

/// # Safety
/// `spec` must be null or a handle from [`csk_spec_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn csk_spec_free(spec: *mut CskSpec) {
    if !spec.is_null() {
        drop(Box::from_raw(spec));
    }
}

/// Uniform PAPR cap for every LED; a value `<= 0` removes the cap.
///
/// # Safety
/// `spec` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn csk_spec_set_papr(spec: *mut CskSpec, alpha: f64) -> CskStatus {
    guard(|| {
        let s = get_mut(spec)?;
        let mut next = s.spec.clone();
        next.papr_caps = if alpha > 0.0 { Some(vec![alpha; next.n_leds()]) } else { None };
        check(next.validate())?;
        s.spec = next;
        Ok(())
    })
}

/// # Safety
/// `spec` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn csk_spec_set_restarts(spec: *mut CskSpec, restarts: usize, seed: u64) -> CskStatus {
    guard(|| {
        let s = get_mut(spec)?;
        if restarts == 0 {
            return Err(invalid("restarts must be positive"));
        }
        s.spec.restarts = restarts;
        s.spec.seed = seed;
        Ok(())
    })
}

/// # Safety
/// `spec` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn csk_spec_set_color(spec: *mut CskSpec, red: f64, green: f64, blue: f64) -> CskStatus {
    guard(|| {
        let s = get_mut(spec)?;
        let mut next = s.spec.clone();
        next.color_fractions = [red, green, blue];
        check(next.validate())?;
        s.spec = next;
        Ok(())
    })
}

/// Multi-start design. With `CskEqualizer::SvdPre` the
/// constellation lives in the pre-equalized domain of the cross-talk
/// channel; otherwise it is a plain intensity design.
///
/// # Safety
/// `spec` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn csk_design(
    spec: *const CskSpec,
    equalizer: CskEqualizer,
    eps: f64,
    out: *mut *mut CskConstellation,
) -> CskStatus {
    guard(|| {
        let mut s = get(spec)?.spec.clone();
        s.crosstalk_eps = eps;
        let pre = if equalizer == CskEqualizer::SvdPre {
            let ch = check(crosstalk_channel(eps, s.n_leds()))?;
            check(svd_equalizers(&ch.matrix))?.pre
        } else {
            None
        };
        let r = check(multi_start_design(&s, pre.as_ref()))?;
        put(
            out,
            CskConstellation {
                constellation: r.best.constellation,
                t_star: r.best.t_star,
                eps,
                equalizer,
            },
        )
    })
}

/// Builds a constellation from `n_symbols * dim` row-major intensities.
///
/// # Safety
/// `points` must be valid for `n_symbols * dim` reads; `out` for writes.
#[no_mangle]
pub unsafe extern "C" fn csk_constellation_from_points(
    points: *const f64,
    n_symbols: usize,
    dim: usize,
    out: *mut *mut CskConstellation,
) -> CskStatus {
    guard(|| {
        if points.is_null() {
            set_error("null points");
            return Err(CskStatus::NullPointer);
        }
        let data = std::slice::from_raw_parts(points, n_symbols * dim);
        let c = check(Constellation::from_joint(
            data,
            dim,
            csk_core::model::DomainTag::Intensity,
        ))?;
        put(
            out,
            CskConstellation {
                constellation: c,
                t_star: f64::NAN,
                eps: 0.0,
                equalizer: CskEqualizer::None,
            },
        )
    })
}

/// # Safety
/// `c` must be null or a live constellation handle.
#[no_mangle]
pub unsafe extern "C" fn csk_constellation_free(c: *mut CskConstellation) {
    if !c.is_null() {
        drop(Box::from_raw(c));
    }
}

/// Minimum Euclidean distance; NaN for a null handle.
///
/// # Safety
/// `c` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn csk_constellation_med(c: *const CskConstellation) -> f64 {
    c.as_ref().map_or(f64::NAN, |c| c.constellation.med)
}

/// Optimized squared-distance bound of a designed constellation.
///
/// # Safety
/// `c` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn csk_constellation_t_star(c: *const CskConstellation) -> f64 {
    c.as_ref().map_or(f64::NAN, |c| c.t_star)
}

/// Writes the symbol count and dimension.
///
/// # Safety
/// `c` must be a live handle; the outputs valid for writes.
#[no_mangle]
pub unsafe extern "C" fn csk_constellation_shape(
    c: *const CskConstellation,
    n_symbols: *mut usize,
    dim: *mut usize,
) -> CskStatus {
    guard(|| {
        let c = get(c)?;
        if n_symbols.is_null() || dim.is_null() {
            set_error("null output pointer");
            return Err(CskStatus::NullPointer);
        }
        *n_symbols = c.constellation.len();
        *dim = c.constellation.dim;
        Ok(())
    })
}

/// Copies the row-major points into `buf` of `len` doubles.
///
/// # Safety
/// `c` must be a live handle, `buf` valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn csk_constellation_points(
    c: *const CskConstellation,
    buf: *mut f64,
    len: usize,
) -> CskStatus {
    guard(|| {
        let c = get(c)?;
        let joint = c.constellation.joint();
        if buf.is_null() {
            set_error("null buffer");
            return Err(CskStatus::NullPointer);
        }
        if len < joint.len() {
            set_error(&format!("buffer holds {len} values, need {}", joint.len()));
            return Err(CskStatus::BufferTooSmall);
        }
        ptr::copy_nonoverlapping(joint.as_ptr(), buf, joint.len());
        Ok(())
    })
}

/// Binary switching labeling at the given design OSNR.
///
/// # Safety
/// `c` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn csk_label(
    c: *const CskConstellation,
    design_osnr_db: f64,
    avg_power: f64,
    restarts: usize,
    seed: u64,
    out: *mut *mut CskLabeling,
) -> CskStatus {
    guard(|| {
        let c = get(c)?;
        if !(avg_power > 0.0) {
            return Err(invalid("avg_power must be positive"));
        }
        let n0 = noise_param_from_osnr(design_osnr_db, avg_power, 1);
        let l = check(bsa_optimize_with_restarts(
            &c.constellation,
            n0,
            restarts,
            &mut rng_from_seed(seed),
        ))?;
        put(out, CskLabeling { labeling: l })
    })
}

/// # Safety
/// `l` must be null or a live labeling handle.
#[no_mangle]
pub unsafe extern "C" fn csk_labeling_free(l: *mut CskLabeling) {
    if !l.is_null() {
        drop(Box::from_raw(l));
    }
}

/// Union-bound cost of the labeling; NaN for a null handle.
///
/// # Safety
/// `l` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn csk_labeling_cost(l: *const CskLabeling) -> f64 {
    l.as_ref().map_or(f64::NAN, |l| l.labeling.cost)
}

/// Copies the word of every symbol into `buf` of `len` entries.
///
/// # Safety
/// `l` must be a live handle, `buf` valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn csk_labeling_words(l: *const CskLabeling, buf: *mut u32, len: usize) -> CskStatus {
    guard(|| {
        let l = get(l)?;
        let words = &l.labeling.word_of_symbol;
        if buf.is_null() {
            set_error("null buffer");
            return Err(CskStatus::NullPointer);
        }
        if len < words.len() {
            set_error(&format!("buffer holds {len} words, need {}", words.len()));
            return Err(CskStatus::BufferTooSmall);
        }
        for (k, w) in words.iter().enumerate() {
            *buf.add(k) = *w as u32;
        }
        Ok(())
    })
}

/// Monte Carlo BER of `c` under `l` at one OSNR, through the receiver the
/// constellation was designed for.
///
/// # Safety
/// Handles must be live and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn csk_simulate(
    c: *const CskConstellation,
    l: *const CskLabeling,
    equalizer: CskEqualizer,
    osnr_db: f64,
    n_bits: u64,
    seed: u64,
    avg_power: f64,
    out: *mut CskBerPoint,
) -> CskStatus {
    guard(|| {
        let c = get(c)?;
        let l = get(l)?;
        if out.is_null() {
            set_error("null output pointer");
            return Err(CskStatus::NullPointer);
        }
        if equalizer != c.equalizer && (equalizer == CskEqualizer::SvdPre || c.equalizer == CskEqualizer::SvdPre) {
            return Err(invalid("constellation was designed for a different equalizer domain"));
        }
        let dim = c.constellation.dim;
        let channel = if c.eps == 0.0 && equalizer != CskEqualizer::SvdPre {
            ChannelModel::identity(dim)
        } else {
            check(crosstalk_channel(c.eps, dim))?
        };
        let n0 = noise_param_from_osnr(osnr_db, avg_power, 1);
        let (kind, eq): (EqualizerKind, EqualizerSet) = match equalizer {
            CskEqualizer::None => (EqualizerKind::Identity, EqualizerSet::identity(dim)),
            CskEqualizer::SvdPre => (EqualizerKind::SvdPre, check(svd_equalizers(&channel.matrix))?),
            CskEqualizer::Zf => (EqualizerKind::Zf, check(zf_equalizer(&channel.matrix))?),
            CskEqualizer::Lmmse => (
                EqualizerKind::Lmmse,
                check(lmmse_equalizer(&channel.matrix, &c.constellation, n0))?,
            ),
        };
        let mut spec = DesignSpec::default();
        spec.avg_power = avg_power;
        let mut sim = SimConfig::new(vec![osnr_db], channel, kind);
        sim.n_bits = n_bits;
        sim.seed = seed;
        let rep = check(run_ber(&c.constellation, &l.labeling, &eq, &sim, &spec))?;
        let p = rep.points[0];
        *out = CskBerPoint {
            osnr_db,
            n_bits: p.n_bits,
            bit_errors: p.bit_errors,
            symbol_errors: p.symbol_errors,
            ber: p.ber(),
        };
        Ok(())
    })
}
