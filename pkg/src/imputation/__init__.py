"""Tucker factor-model imputation for tensor time series with missing entries."""
