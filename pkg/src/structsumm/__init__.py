"""Unsupervised structure-aware extractive summarization for long
sectioned documents: corpus handling, sentence embeddings, topic and stage
segmentation, graph centrality scoring, budgeted selection, and ROUGE/IRC
evaluation."""

from .corpus import (document_from_html, document_from_record,
                     document_from_text, document_to_record,
                     extract_html_structure, read_corpus, remove_header,
                     split_sentences, write_corpus)
from .embeddings import (HashedEmbedder, ProviderConfig, ServiceEmbedder,
                         TfidfEmbedder, cosine, cosine_matrix, make_embedder,
                         section_embedding)
from .errors import (CorpusFormatError, EmptyDocumentError,
                     MissingLabelsError, MissingReferenceError, ProtocolError,
                     RemoteEmbeddingError, StructSummError)
from .evaluation import (EvalReport, IrcCoverage, MatchParams, RougeScore,
                         evaluate_corpus, ext_oracle, irc_coverage,
                         irc_oracle, position_histogram, pr_delta_report,
                         rouge_l, rouge_n)
from .graph import (CentralityResult, CentralityScorer, HipoRankParams,
                    boundary_distance, centrality, inter_centrality,
                    intra_centrality)
from .segmentation import (C99Params, C99Segmenter, HmmParams, StageHmm,
                           StageHmmModel, StatsReport, segmentation_stats)
from .selection import (LexRankParams, Pick, ReweightParams, SummarySelection,
                        lexrank, lexrank_scores, select_greedy,
                        select_reweighted, summary_record)
from .types import (Document, IrcLabel, Section, Sentence, StructureView,
                    ViewMethod, flat_view, view_from_boundaries)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
