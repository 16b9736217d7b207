FOUR = "four"
EIGHT = "eight"
ADJACENCIES = (FOUR, EIGHT)

OTSU = "otsu"
FIXED = "fixed"
BINARIZE_METHODS = (OTSU, FIXED)

PGM = "pgm"
CSV01 = "csv01"
IMAGE_FORMATS = (PGM, CSV01)
IMAGE_EXTENSIONS = {
    ".pgm": PGM,
    ".csv": CSV01,
}

BALANCED = "balanced"
REMAINDER_POLICIES = (BALANCED, )

LOGREG = "logreg"
KNN = "knn"
SVM = "svm"
MODELS = (LOGREG, KNN, SVM)
