# Output files: time series, VTK snapshots, checkpoints and run reports
