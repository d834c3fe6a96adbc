//! C ABI for the strip-split ANOVA library.
//!
//! Objects cross the boundary as opaque handles created by `*_new` /
//! `*_from_*` functions and released with the matching `*_free`. Every
//! fallible call returns an [`SsStatus`]; on failure a message is available
//! from [`ss_last_error_message`] on the same thread. Sources are addressed
//! by their index in the order R, A, eA, B, eB, AB, eAB, C, AC, BC, ABC, eT.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, UnwindSafe};
use std::ptr;

use strip_split::df_approx::{self, MsPoint};
use strip_split::distributions;
use strip_split::f_tests::{self, FTestResult};
use strip_split::{anova_table, AnovaTable, BalancedLayout, DesignDims, Error, ModelVariant, SourceId};

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SsStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Parse = 3,
    Domain = 4,
    Degenerate = 5,
    Io = 6,
    Panic = 7,
}

pub const SS_SOURCE_COUNT: u32 = 12;
pub const SS_SOURCE_R: u32 = 0;
pub const SS_SOURCE_A: u32 = 1;
pub const SS_SOURCE_EA: u32 = 2;
pub const SS_SOURCE_B: u32 = 3;
pub const SS_SOURCE_EB: u32 = 4;
pub const SS_SOURCE_AB: u32 = 5;
pub const SS_SOURCE_EAB: u32 = 6;
pub const SS_SOURCE_C: u32 = 7;
pub const SS_SOURCE_AC: u32 = 8;
pub const SS_SOURCE_BC: u32 = 9;
pub const SS_SOURCE_ABC: u32 = 10;
pub const SS_SOURCE_ET: u32 = 11;

/// Opaque observed layout.
pub struct SsLayout(BalancedLayout);

/// Opaque ANOVA table.
pub struct SsAnova(AnovaTable);

/// Opaque list of F-test results.
pub struct SsTests(Vec<FTestResult>);

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SsAnovaRow {
    pub df: usize,
    pub ss: f64,
    pub ms: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SsFTest {
    /// Index of the tested source.
    pub source: u32,
    pub f_value: f64,
    pub df1: f64,
    pub df2: f64,
    pub p_value: f64,
    /// True when both sides are single mean squares (exact df).
    pub exact: bool,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).expect("interior NULs removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(err: &Error) -> SsStatus {
    match err {
        Error::Parse { .. } | Error::UnknownSource(_) | Error::InvalidModel(_) => SsStatus::Parse,
        Error::Domain(_) | Error::EmptyList => SsStatus::Domain,
        Error::NonPositiveDenominator { .. } => SsStatus::Degenerate,
        Error::Io(_) => SsStatus::Io,
        _ => SsStatus::InvalidArgument,
    }
}

// Runs `f`, recording any error or panic for `ss_last_error_message`.
fn guard(f: impl FnOnce() -> Result<(), (SsStatus, String)> + UnwindSafe) -> SsStatus {
    match catch_unwind(f) {
        Ok(Ok(())) => SsStatus::Ok,
        Ok(Err((status, message))) => {
            set_error(message);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            SsStatus::Panic
        }
    }
}

fn lib_err(e: Error) -> (SsStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(what: &str) -> (SsStatus, String) {
    (SsStatus::NullPointer, format!("{what} is null"))
}

unsafe fn c_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, (SsStatus, String)> {
    if p.is_null() {
        return Err(null(what));
    }
    // SAFETY: caller passes a NUL-terminated string.
    unsafe { CStr::from_ptr(p) }.to_str().map_err(|_| (SsStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

fn source_of(index: u32) -> Result<SourceId, (SsStatus, String)> {
    SourceId::ALL
        .get(index as usize)
        .copied()
        .ok_or((SsStatus::InvalidArgument, format!("source index {index} out of range")))
}

/// Message of the last failed call on this thread, or NULL. The pointer is
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn ss_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Label of source `index` ("R", "A", "eA", ...), or NULL when out of range.
/// The string is static.
#[no_mangle]
pub extern "C" fn ss_source_label(index: u32) -> *const c_char {
    const LABELS: [&CStr; 12] = [c"R", c"A", c"eA", c"B", c"eB", c"AB", c"eAB", c"C", c"AC", c"BC", c"ABC", c"eT"];
    LABELS.get(index as usize).map_or(ptr::null(), |s| s.as_ptr())
}

/// Reads a layout from a CSV file with columns block, A, B, C, y.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ss_layout_from_csv_file(path: *const c_char, out: *mut *mut SsLayout) -> SsStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let path = unsafe { c_str(path, "path") }?;
        let file = std::fs::File::open(path).map_err(|e| lib_err(Error::Io(e)))?;
        let layout = BalancedLayout::from_csv_reader(file).map_err(lib_err)?;
        unsafe { *out = Box::into_raw(Box::new(SsLayout(layout))) };
        Ok(())
    })
}

/// Parses a layout from CSV text.
///
/// # Safety
/// `text` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ss_layout_from_csv_str(text: *const c_char, out: *mut *mut SsLayout) -> SsStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let text = unsafe { c_str(text, "text") }?;
        let layout = BalancedLayout::from_csv_str(text).map_err(lib_err)?;
        unsafe { *out = Box::into_raw(Box::new(SsLayout(layout))) };
        Ok(())
    })
}

/// Builds a layout from `r·a·b·c` values in row-major (block, A, B, C) order.
///
/// # Safety
/// `values` must point to `len` doubles and `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ss_layout_from_values(
    r: usize,
    a: usize,
    b: usize,
    c: usize,
    values: *const f64,
    len: usize,
    out: *mut *mut SsLayout,
) -> SsStatus {
    guard(|| {
        if out.is_null() || values.is_null() {
            return Err(null(if out.is_null() { "out" } else { "values" }));
        }
        let dims = DesignDims::new(r, a, b, c).map_err(lib_err)?;
        // SAFETY: caller guarantees `len` readable doubles.
        let values = unsafe { std::slice::from_raw_parts(values, len) }.to_vec();
        let layout = BalancedLayout::from_values(dims, values).map_err(lib_err)?;
        unsafe { *out = Box::into_raw(Box::new(SsLayout(layout))) };
        Ok(())
    })
}

/// Writes r, a, b, c into `out_dims[0..4]`.
///
/// # Safety
/// `layout` must be a live handle and `out_dims` must hold four `size_t`.
#[no_mangle]
pub unsafe extern "C" fn ss_layout_dims(layout: *const SsLayout, out_dims: *mut usize) -> SsStatus {
    guard(|| {
        let layout = unsafe { layout.as_ref() }.ok_or_else(|| null("layout"))?;
        if out_dims.is_null() {
            return Err(null("out_dims"));
        }
        let shape = layout.0.dims().shape();
        unsafe { ptr::copy_nonoverlapping(shape.as_ptr(), out_dims, 4) };
        Ok(())
    })
}

/// # Safety
/// `layout` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ss_layout_free(layout: *mut SsLayout) {
    if !layout.is_null() {
        drop(unsafe { Box::from_raw(layout) });
    }
}

/// Computes the twelve-source ANOVA table of a layout.
///
/// # Safety
/// `layout` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ss_anova_new(layout: *const SsLayout, out: *mut *mut SsAnova) -> SsStatus {
    guard(|| {
        let layout = unsafe { layout.as_ref() }.ok_or_else(|| null("layout"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        unsafe { *out = Box::into_raw(Box::new(SsAnova(anova_table(&layout.0)))) };
        Ok(())
    })
}

/// Copies row `source` of the table into `out_row`.
///
/// # Safety
/// `anova` must be a live handle and `out_row` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ss_anova_row(anova: *const SsAnova, source: u32, out_row: *mut SsAnovaRow) -> SsStatus {
    guard(|| {
        let anova = unsafe { anova.as_ref() }.ok_or_else(|| null("anova"))?;
        let out_row = unsafe { out_row.as_mut() }.ok_or_else(|| null("out_row"))?;
        let row = anova.0.row(source_of(source)?);
        *out_row = SsAnovaRow { df: row.df, ss: row.ss, ms: row.ms };
        Ok(())
    })
}

/// # Safety
/// `anova` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ss_anova_free(anova: *mut SsAnova) {
    if !anova.is_null() {
        drop(unsafe { Box::from_raw(anova) });
    }
}

/// Evaluates the F tests of `model` ("FFF", "RRR", "RFF", ...) on a table.
///
/// # Safety
/// `anova` must be a live handle, `model` a NUL-terminated string and `out`
/// a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ss_ftests_new(
    anova: *const SsAnova,
    model: *const c_char,
    out: *mut *mut SsTests,
) -> SsStatus {
    guard(|| {
        let anova = unsafe { anova.as_ref() }.ok_or_else(|| null("anova"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let model: ModelVariant = unsafe { c_str(model, "model") }?.parse().map_err(lib_err)?;
        let results = f_tests::evaluate(&f_tests::f_test_plan(model), &anova.0).map_err(lib_err)?;
        unsafe { *out = Box::into_raw(Box::new(SsTests(results))) };
        Ok(())
    })
}

/// Number of tests in the list (0 for NULL).
///
/// # Safety
/// `tests` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ss_ftests_len(tests: *const SsTests) -> usize {
    unsafe { tests.as_ref() }.map_or(0, |t| t.0.len())
}

/// Copies test `index` into `out_test`.
///
/// # Safety
/// `tests` must be a live handle and `out_test` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ss_ftests_get(tests: *const SsTests, index: usize, out_test: *mut SsFTest) -> SsStatus {
    guard(|| {
        let tests = unsafe { tests.as_ref() }.ok_or_else(|| null("tests"))?;
        let out_test = unsafe { out_test.as_mut() }.ok_or_else(|| null("out_test"))?;
        let t = tests.0.get(index).ok_or((SsStatus::InvalidArgument, format!("test index {index} out of range")))?;
        *out_test = SsFTest {
            source: t.source as u32,
            f_value: t.f_value,
            df1: t.df1.df,
            df2: t.df2.df,
            p_value: t.p_value,
            exact: t.df_method == f_tests::DfMethod::Exact,
        };
        Ok(())
    })
}

/// # Safety
/// `tests` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ss_ftests_free(tests: *mut SsTests) {
    if !tests.is_null() {
        drop(unsafe { Box::from_raw(tests) });
    }
}

/// P(F(d1, d2) > x).
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ss_f_upper_tail(x: f64, d1: f64, d2: f64, out: *mut f64) -> SsStatus {
    guard(|| {
        let out = unsafe { out.as_mut() }.ok_or_else(|| null("out"))?;
        *out = distributions::f_upper_tail(x, d1, d2).map_err(lib_err)?;
        Ok(())
    })
}

/// Satterthwaite df of `n` mean squares with their df.
///
/// # Safety
/// `ms` and `df` must point to `n` elements and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn ss_satterthwaite(ms: *const f64, df: *const usize, n: usize, out: *mut f64) -> SsStatus {
    guard(|| {
        if ms.is_null() || df.is_null() {
            return Err(null("ms/df"));
        }
        let out = unsafe { out.as_mut() }.ok_or_else(|| null("out"))?;
        let (ms, df) = unsafe { (std::slice::from_raw_parts(ms, n), std::slice::from_raw_parts(df, n)) };
        let points: Vec<MsPoint> = ms.iter().zip(df).map(|(&ms, &df)| MsPoint { ms, df }).collect();
        *out = df_approx::satterthwaite(&points).map_err(lib_err)?;
        Ok(())
    })
}

/// Ames–Webster tuning constant r* for df (n1, n2); needs n2 ≥ 5.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ss_aw_rstar(n1: usize, n2: usize, out: *mut f64) -> SsStatus {
    guard(|| {
        let out = unsafe { out.as_mut() }.ok_or_else(|| null("out"))?;
        *out = df_approx::aw_rstar(n1, n2).map_err(lib_err)?;
        Ok(())
    })
}
