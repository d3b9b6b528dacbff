use std::sync::LazyLock;

use regex::Regex;

static URL: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(
        r"(?ix)
        \b(?:https?://|ftp://|www\.)\S+
        | \b[a-z0-9-]+(?:\.[a-z0-9-]+)*\.(?:com|co|io|net|org|ly|me|gl|tv|us|info|biz)/\S*",
    )
    .expect("valid url regex")
});

static IMAGE: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"(?is)!\[[^\]]*\]\([^)]*\)|<img\b[^>]*>|\[img\].*?\[/img\]").expect("valid image regex")
});

// `@handle` and `#tag`, but not `foo@bar.com` or `$ticker`.
static TAG: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"(^|[^\w$@#])[@#][\w.]*\w").expect("valid tag regex"));

static EMAIL: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"\b[\w.+-]+@[\w-]+(?:\.[\w-]+)+\b").expect("valid email regex"));

/// Removes hyperlinks, image markup and `@`/`#` tags, collapsing whitespace.
/// The flag reports whether a hyperlink was present.
pub fn strip_artifacts(text: &str) -> (String, bool) {
    let no_images = IMAGE.replace_all(text, " ");
    let has_hyperlink = URL.is_match(&no_images);
    let no_urls = URL.replace_all(&no_images, " ");
    let no_mail = EMAIL.replace_all(&no_urls, " ");
    let no_tags = TAG.replace_all(&no_mail, "$1 ");
    (collapse_whitespace(&no_tags), has_hyperlink)
}

pub(crate) fn collapse_whitespace(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// A repost starts with `RT @`, `RT:` or a quoted handle (`"@user`).
pub fn is_repost(raw: &str) -> bool {
    let t = raw.trim_start().to_lowercase();
    t.starts_with("rt @")
        || t.starts_with("rt:")
        || t.starts_with("rt@")
        || t.starts_with("\"@")
        || t.starts_with("\u{201c}@")
}
