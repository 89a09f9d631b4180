# Physics models: sources, interferometer, samples, spectra, detection, reconstruction
