/* C interface to the facebench library. All objects are opaque handles owned
 * by the caller and released with the matching *_free function. Functions
 * return an fb_status; on failure fb_last_error() describes the problem (the
 * message is thread-local and valid until the next call on that thread). */
#ifndef FACEBENCH_H
#define FACEBENCH_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(FACEBENCH_BUILDING_DLL)
#define FB_API __attribute__((visibility("default")))
#else
#define FB_API
#endif

typedef enum fb_status {
    FB_OK = 0,
    FB_ERR_CONFIG = 2,  /* invalid option or combination of options */
    FB_ERR_DATA = 3,    /* input data missing, malformed or insufficient */
    FB_ERR_IO = 4,      /* a file could not be written */
    FB_ERR_NUMERIC = 5, /* a factorization or solver failed */
    FB_ERR_INTERNAL = 6
} fb_status;

typedef enum fb_feature_kind { FB_FEATURE_PCA = 0, FB_FEATURE_LDA = 1 } fb_feature_kind;
typedef enum fb_ratio { FB_RATIO_9_1 = 0, FB_RATIO_5_5 = 1 } fb_ratio;
typedef enum fb_method { FB_METHOD_NN = 0, FB_METHOD_SVM = 1 } fb_method;
typedef enum fb_fusion_kind {
    FB_FUSION_AVG = 0,
    FB_FUSION_MIN = 1,
    FB_FUSION_MED = 2,
    FB_FUSION_WMP = 3,
    FB_FUSION_WEIGHTED = 4
} fb_fusion_kind;
typedef enum fb_report_format { FB_REPORT_CSV = 0, FB_REPORT_JSON = 1 } fb_report_format;

typedef struct fb_dataset fb_dataset;
typedef struct fb_features fb_features;
typedef struct fb_matrix fb_matrix;
typedef struct fb_predictions fb_predictions;
typedef struct fb_report fb_report;

FB_API const char* fb_version(void);
FB_API const char* fb_build_hash(void);
FB_API const char* fb_last_error(void);
/* Releases strings returned through char** out-parameters. */
FB_API void fb_string_free(char* s);

/* ---- datasets ---------------------------------------------------------- */

typedef struct fb_synthetic_spec {
    size_t n_female;
    size_t n_male;
    size_t images_per_subject;
    size_t height;
    size_t width;
    double intra_noise; /* pixel noise standard deviation */
    uint64_t seed;
} fb_synthetic_spec;

/* 100 female + 500 male subjects, 10 images of 70x60, noise 20, seed 1. */
FB_API void fb_synthetic_spec_init(fb_synthetic_spec* spec);
/* Parses "default" or comma-separated key=value overrides of the default
 * (n_female, n_male, images, height, width, noise, seed). */
FB_API fb_status fb_synthetic_spec_parse(const char* text, fb_synthetic_spec* spec);
FB_API fb_status fb_dataset_generate(const fb_synthetic_spec* spec, fb_dataset** out);
FB_API fb_status fb_dataset_load(const char* manifest_path, fb_dataset** out);
/* Writes PGMs and manifest.csv into dir. `out` may be NULL. */
FB_API fb_status fb_dataset_save(const fb_dataset* data, const char* dir, fb_dataset** out);
/* Aligns, crops and equalizes every image into dir. */
FB_API fb_status fb_dataset_preprocess(const fb_dataset* data, const char* dir, unsigned threads, fb_dataset** out);
FB_API size_t fb_dataset_size(const fb_dataset* data);
FB_API size_t fb_dataset_subject_count(const fb_dataset* data);
FB_API size_t fb_dataset_female_subjects(const fb_dataset* data);
FB_API void fb_dataset_free(fb_dataset* data);

/* ---- features ---------------------------------------------------------- */

typedef struct fb_features_spec {
    fb_feature_kind kind;
    size_t n_components;       /* capped at the data rank / class count */
    fb_ratio ratio;
    size_t images_per_subject; /* subjects with fewer are dropped; 0 keeps all images */
    uint64_t seed;
    unsigned threads;
} fb_features_spec;

FB_API void fb_features_spec_init(fb_features_spec* spec);
/* Splits the dataset, fits the projection on the training part and projects
 * every image. */
FB_API fb_status fb_features_compute(const fb_dataset* data, const fb_features_spec* spec, fb_features** out);
/* CSV: image_id,subject_id,split,f0,f1,... with split "train" or "test". */
FB_API fb_status fb_features_save_csv(const fb_features* f, const char* path);
FB_API fb_status fb_features_load_csv(const char* path, fb_features** out);
/* Binary projection model; only for features computed in this process. */
FB_API fb_status fb_features_save_model(const fb_features* f, const char* path);
FB_API size_t fb_features_rows(const fb_features* f);
FB_API size_t fb_features_cols(const fb_features* f);
FB_API void fb_features_free(fb_features* f);

/* ---- classification ---------------------------------------------------- */

typedef struct fb_classify_spec {
    fb_method method;
    int metric;          /* 1..8 in the published numbering (NN only) */
    double C;            /* SVM */
    double gamma;        /* SVM; <= 0 selects 1 / n_features */
    int tune;            /* SVM grid search with `folds`-fold cross-validation */
    size_t folds;
    uint64_t seed;
    double metric_ridge; /* Mahalanobis covariance regularization */
    unsigned threads;
} fb_classify_spec;

FB_API void fb_classify_spec_init(fb_classify_spec* spec);
/* Parses "nn:<metric>" or "svm" into spec->method / spec->metric. */
FB_API fb_status fb_classify_spec_set_method(fb_classify_spec* spec, const char* text);
/* Train rows form the gallery, test rows are classified. For NN, `distances`
 * (may be NULL) receives the probe x gallery matrix. */
FB_API fb_status fb_classify(const fb_features* f, const fb_classify_spec* spec, fb_predictions** out,
                             fb_matrix** distances);
FB_API size_t fb_predictions_count(const fb_predictions* p);
FB_API double fb_predictions_accuracy(const fb_predictions* p);
/* CSV: probe_id,predicted_subject,true_subject,correct */
FB_API fb_status fb_predictions_save_csv(const fb_predictions* p, const char* path);
FB_API void fb_predictions_free(fb_predictions* p);

/* ---- distance matrices and fusion ---------------------------------------- */

FB_API fb_status fb_matrix_load_csv(const char* path, fb_matrix** out);
FB_API fb_status fb_matrix_save_csv(const fb_matrix* m, const char* path);
FB_API size_t fb_matrix_rows(const fb_matrix* m);
FB_API size_t fb_matrix_cols(const fb_matrix* m);
FB_API fb_status fb_matrix_get(const fb_matrix* m, size_t row, size_t col, double* value);
FB_API fb_status fb_fusion_kind_parse(const char* text, fb_fusion_kind* kind);
/* Min-max normalizes each input (globally, or per row when per_row != 0) and
 * combines them. `weights` is used by FB_FUSION_WEIGHTED only. */
FB_API fb_status fb_matrix_fuse(const fb_matrix* const* inputs, size_t k, fb_fusion_kind kind, const double* weights,
                                size_t n_weights, int per_row, fb_matrix** out);
/* Nearest-neighbour decision; subjects are read from ids of the form
 * "<subject>#<n>". */
FB_API fb_status fb_matrix_classify(const fb_matrix* m, fb_predictions** out);
FB_API void fb_matrix_free(fb_matrix* m);

/* ---- experiments ------------------------------------------------------- */

typedef struct fb_experiment_spec {
    const char* protocols;   /* "e1", "e2", "e3", "e4", "custom" or subset names, comma-separated */
    const char* ratios;      /* "9:1", "5:5", both comma-separated; NULL or "" for the protocol default */
    const char* features;    /* "pca,lda" */
    const char* classifiers; /* "svm,euc,cb,cos,mc,bc,can,corr,cheb"; NULL for all */
    const char* best_k;      /* fusion sizes "2,3,4"; NULL or "" for none */
    const char* schemes;     /* "avg,min,med,wmp,weighted" */
    const char* weights;     /* tuples separated by ';', e.g. "0.8,0.1,0.1;0.4,0.3,0.3"; NULL for defaults */
    uint64_t seed;
    size_t trials;
    size_t n_components;
    size_t custom_female;
    size_t custom_male;
    double svm_C;
    double svm_gamma; /* <= 0 selects 1 / n_features */
    int svm_tune;
    size_t svm_folds;
    double metric_ridge;
    int per_row_normalization;
    unsigned threads;
} fb_experiment_spec;

FB_API void fb_experiment_spec_init(fb_experiment_spec* spec);
/* Validates a spec without running anything. */
FB_API fb_status fb_experiment_spec_check(const fb_experiment_spec* spec);
FB_API fb_status fb_experiment_run(const fb_dataset* data, const fb_experiment_spec* spec, fb_report** out);
/* Like fb_experiment_run but requires best_k; defaults to the eight metrics. */
FB_API fb_status fb_fusion_study_run(const fb_dataset* data, const fb_experiment_spec* spec, fb_report** out);
/* Format from the extension (.csv / .json); also writes <stem>.timing.csv. */
FB_API fb_status fb_report_save(const fb_report* r, const char* path);
FB_API fb_status fb_report_render(const fb_report* r, fb_report_format format, char** text);

typedef struct fb_cell_info {
    const char* protocol;
    const char* ratio;
    const char* feature;
    const char* classifier;
    size_t trials;
    double mean_accuracy;
    double sd_accuracy;
    double fit_seconds;     /* mean over trials */
    double predict_seconds; /* mean over trials */
} fb_cell_info;

typedef struct fb_fusion_info {
    const char* protocol;
    const char* ratio;
    const char* feature;
    size_t k;
    const char* row;
    int constituent;
    double mean_accuracy;
    int at_least_best; /* every trial */
} fb_fusion_info;

FB_API size_t fb_report_cell_count(const fb_report* r);
/* Strings in `info` stay valid while the report lives. */
FB_API fb_status fb_report_cell(const fb_report* r, size_t index, fb_cell_info* info);
FB_API size_t fb_report_fusion_count(const fb_report* r);
FB_API fb_status fb_report_fusion(const fb_report* r, size_t index, fb_fusion_info* info);
FB_API size_t fb_report_warning_count(const fb_report* r);
FB_API const char* fb_report_warning(const fb_report* r, size_t index);
/* Summed wall time of the timing sections whose label starts with prefix. */
FB_API double fb_report_seconds(const fb_report* r, const char* prefix);
FB_API void fb_report_free(fb_report* r);

#ifdef __cplusplus
}
#endif

#endif
