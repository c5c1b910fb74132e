"Regression models predicting QoR from feature vectors"
