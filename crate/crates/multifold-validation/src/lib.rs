//! Holds the `acceptance` test target, which runs end-to-end checks of the
//! engine and prints one `PASS`/`FAIL` line per check. It lives in its own
//! package so that it runs after the unit and integration suites.
