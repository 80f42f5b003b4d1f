# Infrastructure package 
