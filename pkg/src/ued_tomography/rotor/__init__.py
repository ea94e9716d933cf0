"""Linear rigid rotor: ensembles, alignment dynamics and angular distributions."""
