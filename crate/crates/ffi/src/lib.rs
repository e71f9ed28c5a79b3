//! C ABI over the certainty toolkit.
//!
//! Every fallible function returns a [`CertaintyStatus`] and writes results
//! through out-pointers. On failure, [`certainty_last_error`] describes the
//! error on the calling thread. Handles are opaque and must be released with
//! their `_free` function.

use std::cell::RefCell;
use std::ffi::{CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use libc::{c_char, c_double, size_t};

use certainty::analysis::flesch_reading_ease;
use certainty::corpus::{Aspect, ScientificFinding, Source};
use certainty::evalkit::pearson_r;
use certainty::lexicon::{count_hedges, Lexicon, MatchMode, Stopwords};
use certainty::matching::{match_stats, normalize_for_match};
use certainty::scoring::SavedModel;
use certainty::Error;

/// Number of aspects written by [`certainty_model_score`].
pub const CERTAINTY_ASPECT_COUNT: usize = 6;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CertaintyStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    InvalidInput = 3,
    Degenerate = 4,
    Io = 5,
    Panic = 6,
}

/// A hedge or report-verb lexicon.
pub struct CertaintyLexicon {
    inner: Lexicon,
}

/// A saved scoring model (bag-of-words or hedge).
pub struct CertaintyModel {
    inner: SavedModel,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

fn status_of(e: &Error) -> CertaintyStatus {
    match e {
        Error::Io { .. } | Error::Transport(_) => CertaintyStatus::Io,
        Error::Degenerate(_) | Error::ZeroVariance(_) | Error::NoPairableValues | Error::RankDeficient(_) => CertaintyStatus::Degenerate,
        _ => CertaintyStatus::InvalidInput,
    }
}

struct Fail(CertaintyStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Fail {
        Fail(status_of(&e), e.to_string())
    }
}

/// Runs `f`, recording any error or panic for [`certainty_last_error`].
fn guard(f: impl FnOnce() -> Result<(), Fail>) -> CertaintyStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => CertaintyStatus::Ok,
        Ok(Err(Fail(status, message))) => {
            set_error(message);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            CertaintyStatus::Panic
        }
    }
}

unsafe fn utf8<'a>(p: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(Fail(CertaintyStatus::NullPointer, format!("{what} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|e| Fail(CertaintyStatus::InvalidUtf8, format!("{what} is not UTF-8: {e}")))
}

unsafe fn out<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Fail> {
    p.as_mut().ok_or_else(|| Fail(CertaintyStatus::NullPointer, format!("{what} is null")))
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or_else(|| Fail(CertaintyStatus::NullPointer, format!("{what} is null")))
}

/// Message for the last failed call on this thread, or null. The pointer is
/// valid until the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn certainty_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn certainty_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// The shipped hedge lexicon.
///
/// # Safety
/// `out_lexicon` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn certainty_lexicon_default_hedges(out_lexicon: *mut *mut CertaintyLexicon) -> CertaintyStatus {
    guard(|| {
        let slot = out(out_lexicon, "out_lexicon")?;
        *slot = Box::into_raw(Box::new(CertaintyLexicon { inner: Lexicon::default_hedges() }));
        Ok(())
    })
}

/// Parses lexicon text: one entry per line, `#` comments. Multiword entries
/// match as phrases.
///
/// # Safety
/// `name` and `text` must be NUL-terminated strings; `out_lexicon` must be valid.
#[no_mangle]
pub unsafe extern "C" fn certainty_lexicon_parse(
    name: *const c_char,
    text: *const c_char,
    out_lexicon: *mut *mut CertaintyLexicon,
) -> CertaintyStatus {
    guard(|| {
        let slot = out(out_lexicon, "out_lexicon")?;
        let inner = Lexicon::parse(utf8(name, "name")?, utf8(text, "text")?, MatchMode::Phrase)?;
        *slot = Box::into_raw(Box::new(CertaintyLexicon { inner }));
        Ok(())
    })
}

/// # Safety
/// `lexicon` must come from this library and not be used afterwards. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn certainty_lexicon_free(lexicon: *mut CertaintyLexicon) {
    if !lexicon.is_null() {
        drop(Box::from_raw(lexicon));
    }
}

/// Number of lexicon matches in `text`.
///
/// # Safety
/// Pointers must be valid; `text` NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn certainty_count_hedges(
    lexicon: *const CertaintyLexicon,
    text: *const c_char,
    out_count: *mut size_t,
) -> CertaintyStatus {
    guard(|| {
        let lex = handle(lexicon, "lexicon")?;
        let slot = out(out_count, "out_count")?;
        *slot = count_hedges(utf8(text, "text")?, &lex.inner);
        Ok(())
    })
}

/// Loads a model saved by `certainty train`.
///
/// # Safety
/// `json` must be NUL-terminated; `out_model` must be valid.
#[no_mangle]
pub unsafe extern "C" fn certainty_model_load(json: *const c_char, out_model: *mut *mut CertaintyModel) -> CertaintyStatus {
    guard(|| {
        let slot = out(out_model, "out_model")?;
        let inner = SavedModel::from_json(utf8(json, "json")?)?;
        *slot = Box::into_raw(Box::new(CertaintyModel { inner }));
        Ok(())
    })
}

/// # Safety
/// `model` must come from this library and not be used afterwards. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn certainty_model_free(model: *mut CertaintyModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Scores one sentence. `out_aspects`, when not null, receives
/// [`CERTAINTY_ASPECT_COUNT`] labels in the order number, extent,
/// probability, framing, condition, suggestion, coded 0 = not present,
/// 1 = certain, 2 = uncertain.
///
/// # Safety
/// `model` and `out_certainty` must be valid; `out_aspects` null or valid for 6 bytes.
#[no_mangle]
pub unsafe extern "C" fn certainty_model_score(
    model: *const CertaintyModel,
    text: *const c_char,
    out_certainty: *mut c_double,
    out_aspects: *mut u8,
) -> CertaintyStatus {
    guard(|| {
        let m = handle(model, "model")?;
        let certainty = out(out_certainty, "out_certainty")?;
        let t = utf8(text, "text")?;
        let finding = ScientificFinding {
            finding_id: "ffi".into(),
            text: t.to_string(),
            source: Source::Abstract,
            origin_doi: String::new(),
            origin_article_id: None,
            extraction_keyword: None,
            char_span: (0, t.len()),
        };
        let score = m.inner.scorer().score(&finding)?;
        *certainty = score.sentence_certainty;
        if !out_aspects.is_null() {
            let labels = std::slice::from_raw_parts_mut(out_aspects, CERTAINTY_ASPECT_COUNT);
            for aspect in Aspect::ALL {
                labels[aspect.index()] = score.aspects.get(aspect).index() as u8;
            }
        }
        Ok(())
    })
}

/// Shared normalized stems and their Jaccard similarity under the shipped
/// stopword list.
///
/// # Safety
/// Pointers must be valid; strings NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn certainty_match_stats(
    a: *const c_char,
    b: *const c_char,
    out_overlap: *mut size_t,
    out_jaccard: *mut c_double,
) -> CertaintyStatus {
    guard(|| {
        let stop = Stopwords::default_list();
        let sa = normalize_for_match(utf8(a, "a")?, &stop);
        let sb = normalize_for_match(utf8(b, "b")?, &stop);
        let stats = match_stats(&sa, &sb);
        *out(out_overlap, "out_overlap")? = stats.overlap;
        *out(out_jaccard, "out_jaccard")? = stats.jaccard;
        Ok(())
    })
}

/// Flesch reading ease of `text`.
///
/// # Safety
/// Pointers must be valid; `text` NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn certainty_flesch(text: *const c_char, out_score: *mut c_double) -> CertaintyStatus {
    guard(|| {
        let slot = out(out_score, "out_score")?;
        *slot = flesch_reading_ease(utf8(text, "text")?)?;
        Ok(())
    })
}

/// Pearson correlation of two arrays of length `n`.
///
/// # Safety
/// `xs` and `ys` must be valid for `n` doubles.
#[no_mangle]
pub unsafe extern "C" fn certainty_pearson(
    xs: *const c_double,
    ys: *const c_double,
    n: size_t,
    out_r: *mut c_double,
) -> CertaintyStatus {
    guard(|| {
        if xs.is_null() || ys.is_null() {
            return Err(Fail(CertaintyStatus::NullPointer, "xs or ys is null".into()));
        }
        let slot = out(out_r, "out_r")?;
        *slot = pearson_r(std::slice::from_raw_parts(xs, n), std::slice::from_raw_parts(ys, n))?;
        Ok(())
    })
}
