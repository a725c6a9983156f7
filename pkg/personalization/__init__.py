"""Subject personalization via a rare identifier token."""

from .subject import PersonalizationResult, load_subject_images, personalize, validate_subject

__all__ = ["PersonalizationResult", "load_subject_images", "personalize", "validate_subject"]
