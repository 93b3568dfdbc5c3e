# examples/ is a reference corpus with foreign dependencies, not part of the suite.
collect_ignore = ["examples"]
