// Copyright 2026 The policy-repair Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

//! Anchored wildcard matching: `*` matches any (possibly empty) run of
//! characters, `?` matches exactly one character. No other metacharacters.

/// Returns true when `value` is in the language of `pattern`.
///
/// Linear-space backtracking over characters; on a mismatch after a `*` the
/// match resumes one character past the last star position.
pub fn match_pattern(pattern: &str, value: &str, case_insensitive: bool) -> bool {
    let pat: Vec<char> = pattern.chars().collect();
    let val: Vec<char> = value.chars().collect();

    let (mut p, mut v) = (0usize, 0usize);
    let mut star: Option<(usize, usize)> = None;

    while v < val.len() {
        if p < pat.len() && pat[p] == '*' {
            star = Some((p, v));
            p += 1;
        } else if p < pat.len() && (pat[p] == '?' || chars_eq(pat[p], val[v], case_insensitive)) {
            p += 1;
            v += 1;
        } else if let Some((sp, sv)) = star {
            p = sp + 1;
            v = sv + 1;
            star = Some((sp, sv + 1));
        } else {
            return false;
        }
    }
    pat[p..].iter().all(|&c| c == '*')
}

pub fn has_wildcard(pattern: &str) -> bool {
    pattern.contains(['*', '?'])
}

fn chars_eq(a: char, b: char, case_insensitive: bool) -> bool {
    a == b || (case_insensitive && a.to_lowercase().eq(b.to_lowercase()))
}
