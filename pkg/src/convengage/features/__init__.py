from .assemble import (
    ALL_GROUPS,
    CONTENT_GROUPS,
    STYLE_GROUPS,
    FeatureSpace,
    FeatureVector,
    Featurizer,
    Group,
    Posts,
    StyleScores,
    initial_posts,
    parse_toggles,
    read_triplets,
    toggles_label,
    write_triplets,
)
from .dialogue import TAG_ORDER, DialogueTag, tag_dialogue
from .empathy import EmpathyScores, score_empathy
from .external import ExternalScores, load_external_scores, read_external_scores
from .lexicon import (
    SHIPPED_CATEGORIES,
    Lexicon,
    load_lexicon,
    load_lexicon_dir,
    load_liwc_dic,
    score_lexicon,
    shipped_lexicons,
    summary_scores,
)
from .tfidf import TfIdfVocabulary, fit_tfidf, transform_tfidf
