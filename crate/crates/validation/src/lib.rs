//! Holds the `acceptance` test target, which checks the laboratory against
//! its numerical acceptance thresholds and prints one line per criterion.
